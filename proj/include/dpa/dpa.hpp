#pragma once

#include "errors.hpp"
#include "io.hpp"
#include "matrix.hpp"
#include "numeric.hpp"
#include "optshrink.hpp"
#include "random.hpp"
#include "report.hpp"
#include "root_finding.hpp"
#include "selectors.hpp"
#include "simulate.hpp"
#include "spectral_edge.hpp"
#include "svd.hpp"
#include "version.hpp"
