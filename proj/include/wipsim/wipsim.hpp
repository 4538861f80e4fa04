// Copyright 2026 The wipsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#pragma once

#include "wipsim/arm.hpp"
#include "wipsim/balance.hpp"
#include "wipsim/errors.hpp"
#include "wipsim/harness/batch.hpp"
#include "wipsim/harness/config.hpp"
#include "wipsim/harness/envelope.hpp"
#include "wipsim/harness/runner.hpp"
#include "wipsim/harness/scenario.hpp"
#include "wipsim/harness/scenarios.hpp"
#include "wipsim/harness/trace.hpp"
#include "wipsim/muscle.hpp"
#include "wipsim/plant.hpp"
#include "wipsim/riccati.hpp"
