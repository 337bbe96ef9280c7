#include "rwre/scales.hpp"

#include <cmath>

#include "rwre/error.hpp"
#include "rwre/region.hpp"

namespace rwre {

std::int64_t scale_R(int k, std::int64_t N) {
  require(k >= 1, Errc::BadParameter, "scale index k must be >= 1");
  require(N >= 16, Errc::BadParameter, "scale_R requires N >= 16");
  return scale_R_unchecked(k, N);
}

void LadderParams::validate() const {
  require(d >= 2, Errc::BadParameter, "ladder dimension must be >= 2");
  require(beta > 0.0 && beta < 1.0, Errc::BadParameter, "beta must lie in (0,1)");
  require(alpha > 0.0 && alpha < beta * d, Errc::BadParameter, "alpha must lie in (0, beta d)");
  if (!paper_mode) {
    require(explicit_L1 >= 2, Errc::BadParameter, "explicit ladder needs L1 >= 2");
    require(explicit_m >= 2, Errc::DegenerateLadder, "explicit ladder needs multiplier >= 2");
    require(delta > 0.0, Errc::BadParameter, "delta must be positive");
    return;
  }
  double delta_cap = (beta * d - alpha) / (12.0 * d);
  require(delta > 0.0 && delta < delta_cap, Errc::BadParameter,
          "delta outside (0, (beta d - alpha)/(12d))");
  require(psi > 2.0 * delta && psi < 20.0 * delta / 9.0, Errc::BadParameter,
          "psi outside (2 delta, 20 delta / 9)");
  double chi_cap = std::min({(beta - 6.0 * delta) / 2.0, psi / 4.0, 6.0 / (d - 1.0)});
  require(chi > 0.0 && chi < chi_cap, Errc::BadParameter,
          "chi outside (0, (beta-6delta)/2 ^ psi/4 ^ 6/(d-1))");
  require(theta == chi, Errc::BadParameter, "paper mode fixes theta = chi");
}

LadderParams LadderParams::paper(int d, double alpha, double beta, double delta, double psi,
                                 double chi) {
  LadderParams p;
  p.d = d;
  p.alpha = alpha;
  p.beta = beta;
  p.delta = delta;
  p.psi = psi;
  p.chi = chi;
  p.theta = chi;
  p.paper_mode = true;
  p.validate();
  return p;
}

LadderParams LadderParams::explicit_mode(int d, std::int64_t L1, std::int64_t m, double alpha,
                                         double beta, double delta) {
  LadderParams p;
  p.d = d;
  p.alpha = alpha;
  p.beta = beta;
  p.delta = delta;
  p.paper_mode = false;
  p.explicit_L1 = L1;
  p.explicit_m = m;
  p.validate();
  return p;
}

ScaleLadder build_ladder(std::int64_t L, const LadderParams& params) {
  params.validate();
  require(L >= 2, Errc::BadParameter, "ladder base length must be >= 2");
  ScaleLadder ladder;
  ladder.L = L;
  std::int64_t L1, m;
  if (params.paper_mode) {
    L1 = static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(L), params.psi)));
    m = static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(L), params.chi)));
    require(m >= 2, Errc::DegenerateLadder,
            "floor(L^chi) <= 1: paper-mode regime is vacuous at this L");
    require(L1 >= 2, Errc::DegenerateLadder, "floor(L^psi) <= 1 at this L");
  } else {
    L1 = params.explicit_L1;
    m = params.explicit_m;
  }
  ladder.multiplier = m;
  double cut = std::pow(static_cast<double>(L), 1.0 + params.delta);
  std::int64_t Lk = L1;
  while (true) {
    ladder.levels.push_back(Lk);
    if (static_cast<double>(Lk) * static_cast<double>(Lk) > cut) break;
    require(Lk <= (std::int64_t{1} << 30) / m, Errc::BadParameter, "ladder level overflow");
    Lk *= m;
  }
  ladder.iota = static_cast<int>(ladder.levels.size());
  return ladder;
}

}  // namespace rwre
