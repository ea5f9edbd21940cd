#pragma once

// Umbrella header: noncommutative Nevanlinna-Pick and Caratheodory
// interpolation on the N-dimensional operator unit ball, built on
// displacement structure.

#include "ncint/derive.hpp"
#include "ncint/displacement.hpp"
#include "ncint/errors.hpp"
#include "ncint/generator.hpp"
#include "ncint/interpolate.hpp"
#include "ncint/io.hpp"
#include "ncint/linalg.hpp"
#include "ncint/points.hpp"
#include "ncint/schur.hpp"
#include "ncint/settings.hpp"
#include "ncint/words.hpp"
