/*
 * Copyright 2026 The TransBoost Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "transboost/data.hpp"
#include "transboost/error.hpp"
#include "transboost/eval.hpp"
#include "transboost/io.hpp"
#include "transboost/matrix.hpp"
#include "transboost/model.hpp"
#include "transboost/objective.hpp"
#include "transboost/rng.hpp"
#include "transboost/run_config.hpp"
#include "transboost/trainer.hpp"
#include "transboost/transloss.hpp"
