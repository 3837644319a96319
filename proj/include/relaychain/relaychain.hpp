// Copyright 2026 The relaychain Authors. All Rights Reserved.
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

#include "relaychain/decoder.hpp"
#include "relaychain/encoder.hpp"
#include "relaychain/error.hpp"
#include "relaychain/evaluation.hpp"
#include "relaychain/geometry.hpp"
#include "relaychain/io.hpp"
#include "relaychain/objectives.hpp"
#include "relaychain/pipeline.hpp"
#include "relaychain/raster.hpp"
#include "relaychain/synthgen.hpp"
