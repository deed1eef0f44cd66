#pragma once

// Everything in one include.

#include "modpoly/analytic.hpp"
#include "modpoly/checkpoint.hpp"
#include "modpoly/composite.hpp"
#include "modpoly/error.hpp"
#include "modpoly/experiments.hpp"
#include "modpoly/field.hpp"
#include "modpoly/net.hpp"
#include "modpoly/parse.hpp"
#include "modpoly/spectral.hpp"
#include "modpoly/trainer.hpp"
#include "modpoly/weights_io.hpp"
