#pragma once

#include <string>
#include <vector>

#include "renv/exclusion.hpp"
#include "renv/hybrid.hpp"
#include "renv/jackson.hpp"
#include "renv/ouenv.hpp"

namespace renv::fixtures {

struct FixtureInfo {
  std::string id;
  std::string anchor;   // theorem/equation tag the fixture exercises
  std::string model;    // jackson | exclusion | hybrid.* | ouenv.*
  std::string summary;
};

const std::vector<FixtureInfo>& catalog();
const FixtureInfo* find(const std::string& id);

// jackson
jackson::EnvironmentSpec jackson_two_site_two_env();
jackson::EnvironmentSpec jackson_single_env();
jackson::EnvironmentSpec jackson_frozen_env();    // alpha == 0
jackson::EnvironmentSpec jackson_factored_tau();  // h(n) tau_bar form

// exclusion
void exclusion_two_site(exclusion::LatticeSpec& lattice, exclusion::HeavyParams& params);
void exclusion_grid_2x2(exclusion::LatticeSpec& lattice, exclusion::HeavyParams& params);

// hybrid
hybrid::LambdaDiffusionSpec lambda_damped();  // sigma = 1/(1 - lam), eps = 1/2
hybrid::LambdaDiffusionSpec lambda_const_sigma();
hybrid::MuBMSpec mu_drifted_bm();
hybrid::WedgeSpec wedge_default();
hybrid::SwitchSpec switch_two_point();  // bounded base interval
hybrid::TwoCompSpec twocomp_default();

// ouenv (all on the [1,2] x [-1,1] rectangle)
ouenv::CombinedDiffusionSpec ou_model_b();
ouenv::CombinedDiffusionSpec ou_model_c();
ouenv::CombinedDiffusionSpec ou_model_d();
ouenv::ModelDParams ou_model_d_params();
double ou_model_b_drift();

}  // namespace renv::fixtures
