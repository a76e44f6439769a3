// Copyright (c) 2026 The fluentcrit Authors
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

#include "fluentcrit/alignment.hpp"
#include "fluentcrit/criteria.hpp"
#include "fluentcrit/editing.hpp"
#include "fluentcrit/error.hpp"
#include "fluentcrit/harness.hpp"
#include "fluentcrit/io.hpp"
#include "fluentcrit/masking.hpp"
#include "fluentcrit/random.hpp"
#include "fluentcrit/report.hpp"
#include "fluentcrit/serialize.hpp"
#include "fluentcrit/spectral.hpp"
#include "fluentcrit/textgrid.hpp"
#include "fluentcrit/version.hpp"
