// Copyright 2026 The Bodymeasure Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "bodymeasure/geometry.hpp"

namespace bm::primitives {

// Closed cylinder along Y with `segments` vertices per ring.
TriangleMesh cylinder(double radius, double y0, double y1, int segments, double cx = 0.0,
                      double cz = 0.0);

// Closed frustum along Y, radius varying linearly from r0 at y0 to r1 at y1.
TriangleMesh frustum(double r0, double r1, double y0, double y1, int segments);

// Axis-aligned box, closed.
TriangleMesh box(Vec3 lo, Vec3 hi);

// UV sphere.
TriangleMesh sphere(Vec3 center, double radius, int segments, int rings);

}  // namespace bm::primitives
