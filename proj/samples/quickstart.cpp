// Solve one seeded deployment with every scheme and print the worst-task error.

#include <cstdio>

#include "risel/risel.hpp"

int main() {
  using namespace risel;
  SystemConfig cfg = SystemConfig::with_dimensions(4, 8, 16);
  const auto tasks = default_tasks();
  const ChannelSet ch = generate_channels(cfg, 2024);

  for (Scheme s : all_schemes()) {
    SchemeOptions opts;
    opts.phase_seed = 7;
    const AoResult r = run_scheme(s, cfg, ch, tasks, opts);
    std::printf("%-13s max error %.5f after %d outer iterations\n", std::string(scheme_name(s)).c_str(),
                clamp_reported_error(r.state.objective), r.outer_iterations);
  }
}
