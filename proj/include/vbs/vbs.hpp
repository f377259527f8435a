// Copyright 2026 The vbsprep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.
#pragma once

#include "vbs/analysis.hpp"
#include "vbs/embedding.hpp"
#include "vbs/error.hpp"
#include "vbs/io.hpp"
#include "vbs/lbfgsb.hpp"
#include "vbs/mps_oracle.hpp"
#include "vbs/parallel.hpp"
#include "vbs/pipeline.hpp"
#include "vbs/qcore.hpp"
#include "vbs/recompiler.hpp"
#include "vbs/rng.hpp"
