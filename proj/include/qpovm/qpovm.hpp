// Copyright 2026 The qpovm Authors
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

#pragma once

#include "qpovm/error.hpp"
#include "qpovm/linalg.hpp"
#include "qpovm/povm_core.hpp"
#include "qpovm/naimark.hpp"
#include "qpovm/transmon.hpp"
#include "qpovm/pulse_sim.hpp"
#include "qpovm/tomography.hpp"
#include "qpovm/estimation.hpp"
#include "qpovm/io.hpp"

namespace qpovm {
inline constexpr const char* kVersion = "0.1.0";
}
