/* Copyright 2026 The osmgen Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include "osmgen/augment.hpp"
#include "osmgen/dpsgd.hpp"
#include "osmgen/error.hpp"
#include "osmgen/fwloss.hpp"
#include "osmgen/io.hpp"
#include "osmgen/metrics.hpp"
#include "osmgen/polygon.hpp"
#include "osmgen/raster.hpp"
#include "osmgen/synth.hpp"
#include "osmgen/util.hpp"
