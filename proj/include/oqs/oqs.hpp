#pragma once

#include "oqs/bath.hpp"
#include "oqs/common.hpp"
#include "oqs/config.hpp"
#include "oqs/core.hpp"
#include "oqs/dynamics.hpp"
#include "oqs/io.hpp"
#include "oqs/kernel.hpp"
#include "oqs/quadrature.hpp"
#include "oqs/qubit.hpp"
#include "oqs/run.hpp"
#include "oqs/wick.hpp"
