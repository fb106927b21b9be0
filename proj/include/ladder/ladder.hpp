#pragma once

#include "config.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "protocol.hpp"
#include "sweep.hpp"
#include "version.hpp"
