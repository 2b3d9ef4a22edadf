// Synthesizes 20 s of breathing at a chosen rate and estimates it back.
#include <cstdlib>
#include <iostream>

#include "spiro/signal/synth.hpp"
#include "spiro/tidal/respiration.hpp"

int main(int argc, char** argv) {
  spiro::signal::SynthParams p;
  p.kind = spiro::signal::SynthKind::Breath;
  p.bpm = argc > 1 ? std::atof(argv[1]) : 15.0;
  p.snr_db = argc > 2 ? std::atof(argv[2]) : 20.0;
  const auto rec = spiro::signal::synth(p);
  const auto r = spiro::tidal::respiration_rate(rec);
  if (r.rejected) {
    std::cout << "rejected: " << r.reason << "\n";
    return 1;
  }
  std::cout << "true " << p.bpm << " bpm, estimated " << r.rate_bpm << " bpm from " << r.peak_set.indices.size()
            << " peaks\n";
  return 0;
}
