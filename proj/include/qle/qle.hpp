#pragma once

#include "qle/errors.hpp"
#include "qle/fft.hpp"
#include "qle/fourier_state.hpp"
#include "qle/harness.hpp"
#include "qle/initial_data.hpp"
#include "qle/lattice.hpp"
#include "qle/microlocal.hpp"
#include "qle/observable.hpp"
#include "qle/plots.hpp"
#include "qle/potential.hpp"
#include "qle/propagator.hpp"
#include "qle/scenario.hpp"
#include "qle/states.hpp"
#include "qle/theory.hpp"
