#pragma once
//
// Umbrella header for the numerical core. The orchestration layer
// (sheetlab/config.hpp, sheetlab/app.hpp) is included separately because it
// pulls in JSON and libcrypto.

#include "sheetlab/density.hpp"
#include "sheetlab/error.hpp"
#include "sheetlab/expr.hpp"
#include "sheetlab/field_program.hpp"
#include "sheetlab/fieldkit.hpp"
#include "sheetlab/jet.hpp"
#include "sheetlab/lattice.hpp"
#include "sheetlab/malliavin.hpp"
#include "sheetlab/norris.hpp"
#include "sheetlab/parallel.hpp"
#include "sheetlab/philox.hpp"
#include "sheetlab/presets.hpp"
#include "sheetlab/solver.hpp"
#include "sheetlab/stats.hpp"
#include "sheetlab/version.hpp"
