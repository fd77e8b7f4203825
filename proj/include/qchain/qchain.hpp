#pragma once

#include "qchain/errors.hpp"
#include "qchain/pauli.hpp"
#include "qchain/operator_sum.hpp"
#include "qchain/hamiltonians.hpp"
#include "qchain/hamiltonian_spec.hpp"
#include "qchain/symmetry.hpp"
#include "qchain/spectra.hpp"
#include "qchain/entanglement.hpp"
#include "qchain/free_fermion.hpp"
#include "qchain/dos_stats.hpp"
#include "qchain/experiments.hpp"
#include "qchain/version.hpp"
