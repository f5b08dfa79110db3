// Copyright 2026 The qest Authors
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

#include "qest/errors.hpp"
#include "qest/linalg.hpp"
#include "qest/seed.hpp"
#include "qest/quantum_model.hpp"
#include "qest/lre_tomography.hpp"
#include "qest/adaptive_tomography.hpp"
#include "qest/identification.hpp"
#include "qest/robust_control.hpp"
#include "qest/io.hpp"
#include "qest/harness.hpp"
