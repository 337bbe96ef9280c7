#pragma once

#include <cstdint>
#include <vector>

namespace rwre {

// R_k(N) = ceil(exp((log log N)^{k+1})). Requires N >= 16 so that
// log log N > 1 and the family is increasing in k.
std::int64_t scale_R(int k, std::int64_t N);

struct LadderParams {
  double alpha = 1.0;
  double beta = 0.5;
  double delta = 0.01;
  double psi = 0.021;
  double chi = 0.005;
  double theta = 0.005;  // equals chi in paper mode
  bool paper_mode = true;
  // Explicit mode: user-chosen first level and multiplier.
  std::int64_t explicit_L1 = 0;
  std::int64_t explicit_m = 0;
  int d = 2;

  void validate() const;  // BadParameter on a broken paper-mode regime

  static LadderParams paper(int d, double alpha, double beta, double delta, double psi,
                            double chi);
  static LadderParams explicit_mode(int d, std::int64_t L1, std::int64_t m, double alpha,
                                    double beta, double delta);
};

struct ScaleLadder {
  std::int64_t L = 0;
  std::vector<std::int64_t> levels;  // L_1 < ... < L_iota
  std::int64_t multiplier = 0;
  int iota = 0;
};

// Paper mode: L_1 = floor(L^psi), L_{k+1} = L_k floor(L^chi); iota is the
// smallest k with L_k^2 > L^{1+delta}. DegenerateLadder when the multiplier
// collapses to 1 at this L.
ScaleLadder build_ladder(std::int64_t L, const LadderParams& params);

}  // namespace rwre
