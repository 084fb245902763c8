#pragma once

#include "ptheta/errors.hpp"
#include "ptheta/qparam.hpp"
#include "ptheta/evalcore.hpp"
#include "ptheta/zerofinder.hpp"
#include "ptheta/spectrum.hpp"
#include "ptheta/spectrum_cache.hpp"
#include "ptheta/factorization.hpp"
