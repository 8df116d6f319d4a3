#pragma once

// The design -> simulate -> report pipeline behind the command-line tool.
// Each command writes its report to `out` and throws on any failure.

#include <filesystem>
#include <fstream>
#include <locale>
#include <optional>
#include <ostream>
#include <string>

#include "relay/artifact.hpp"
#include "relay/config.hpp"
#include "relay/hinf.hpp"
#include "relay/plant.hpp"
#include "relay/pulse.hpp"
#include "relay/sim.hpp"
#include "relay/text.hpp"

namespace relay {

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool zero_input = false;
};

inline FirPulse config_pulse(const RunConfig& c) {
  return srrc_taps(c.relay.rolloff, c.relay.ratio, c.relay.pulse_support, c.relay.sample_period);
}

inline std::filesystem::path prepare_output_dir(const RunConfig& c, const CommandOptions& o) {
  const std::filesystem::path dir = o.out_dir.value_or(c.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error(dir.string() + ": cannot create output directory");
  return dir;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(p.string() + ": cannot open for writing");
  f.imbue(std::locale::classic());  // integer columns must not pick up digit grouping
  return f;
}

struct DesignResult {
  ControllerArtifact artifact;
  std::filesystem::path artifact_path;
  std::string artifact_digest;
  GammaIteration iteration;
  double closed_loop_radius;
  double closed_loop_norm;  // true plant, no regularization
};

inline DesignResult cmd_design(const RunConfig& c, const CommandOptions& o, std::ostream& out) {
  const auto dir = prepare_output_dir(c, o);
  const auto pulse = config_pulse(c);
  const auto plant = build_generalized_plant(c.relay, pulse);
  SynthesisOptions so;
  so.epsilon = c.synthesis.epsilon;
  auto it = gamma_iterate(plant.sigma, c.synthesis.rel_tol, so);

  const auto cl = close_loop(plant.sigma, it.controller.inner);
  const double radius = spectral_radius(cl.a());
  if (!(radius < 1.0)) throw NumericalError("design: closed loop is not stable");
  const double norm = hinf_norm(cl, 1e-10);
  if (!(norm <= it.gamma_opt * (1.0 + 1e-4))) throw NumericalError("design: closed-loop norm exceeds gamma_opt");

  ControllerArtifact art{config_hash(c), it.gamma_opt, it.controller};
  const std::string text = artifact_text(art);
  const auto path = dir / "controller.txt";
  open_output(path) << text;

  const auto& sig = plant.sigma;
  const auto& k = it.controller.inner;
  out << "gamma_opt: " << format_real(it.gamma_opt) << "\n";
  out << "plant: states " << sig.sys.states() << ", inputs w " << sig.nw << " u " << sig.nu << ", outputs z " << sig.nz
      << " y " << sig.ny << "\n";
  out << "controller: states " << k.states() << ", inputs " << k.inputs() << ", outputs " << k.outputs() << "\n";
  out << "dare_residual_x: " << format_real(it.report.x_residual) << "\n";
  out << "dare_residual_y: " << format_real(it.report.y_residual) << "\n";
  out << "gamma_evaluations: " << it.trace.size() << "\n";
  out << "closed_loop_spectral_radius: " << format_real(radius) << "\n";
  out << "closed_loop_hinf_norm: " << format_real(norm) << "\n";
  out << "stable: true\n";
  out << "config_hash: " << art.config_hash << "\n";
  out << "artifact: " << path.string() << "\n";
  out << "artifact_digest: " << fnv1a_hex(text) << "\n";
  return {std::move(art), path, fnv1a_hex(text), std::move(it), radius, norm};
}

inline ControllerArtifact load_matching_artifact(const RunConfig& c, const std::string& controller_path) {
  auto art = read_artifact(controller_path);
  if (art.config_hash != config_hash(c))
    throw ValidationError(controller_path + ": controller was designed for a different configuration (hash " +
                          art.config_hash + ", config " + config_hash(c) + ")");
  return art;
}

struct SimulateResult {
  SimTrace trace;
  ErrorMetrics metrics;
  double norm_ratio;  // |z_d| / |w_d|, NaN for zero input
};

inline SimulateResult cmd_simulate(const RunConfig& c, const std::string& controller_path, const CommandOptions& o,
                                   std::ostream& out) {
  const auto art = load_matching_artifact(c, controller_path);
  const auto dir = prepare_output_dir(c, o);
  const auto pulse = config_pulse(c);
  const auto& ofdm = c.ofdm;
  const SymbolSequence w_d = o.zero_input
                                 ? SymbolSequence::zeros(ofdm.symbols())
                                 : generate_ofdm_bpsk(ofdm.num_blocks, ofdm.block_len, ofdm.guard_len,
                                                      o.seed.value_or(ofdm.seed));
  auto tr = simulate(c.relay, pulse, art.controller, w_d);

  {
    auto f = open_output(dir / "trace.csv");
    f << "k,t,w1,w2,u1,u2,z1,z2,abs_z\n";
    for (Eigen::Index k = 0; k < tr.w.size(); ++k) {
      const auto& w = tr.w.samples;
      const auto& u = tr.u.samples;
      const auto& z = tr.z.samples;
      f << k << "," << format_real(tr.t[k]) << "," << format_real(w(0, k)) << "," << format_real(w(1, k)) << ","
        << format_real(u(0, k)) << "," << format_real(u(1, k)) << "," << format_real(z(0, k)) << ","
        << format_real(z(1, k)) << "," << format_real(z.col(k).norm()) << "\n";
    }
  }
  {
    auto f = open_output(dir / "symbols.csv");
    f << "n,wd1,wd2,ud1,ud2,zd1,zd2\n";
    for (Eigen::Index n = 0; n < tr.z_d.size(); ++n)
      f << n << "," << format_real(tr.w_d.values(0, n)) << "," << format_real(tr.w_d.values(1, n)) << ","
        << format_real(tr.u_d.values(0, n)) << "," << format_real(tr.u_d.values(1, n)) << ","
        << format_real(tr.z_d.values(0, n)) << "," << format_real(tr.z_d.values(1, n)) << "\n";
  }

  if (tr.diverged()) throw NumericalError("simulate: closed loop diverged at sample " + std::to_string(tr.diverged_at));
  const auto m = error_metrics(tr, default_transient(c.relay));
  const double w_energy = tr.w_d.energy();
  const double ratio = w_energy > 0.0 ? std::sqrt(tr.z_d.energy() / w_energy) : std::numeric_limits<double>::quiet_NaN();

  out << "symbols: " << w_d.size() << "\n";
  out << "samples: " << tr.w.size() << "\n";
  out << "gamma_opt: " << format_real(art.gamma_opt) << "\n";
  out << "energy_ratio: " << format_real(m.energy_ratio) << "\n";
  out << "peak_abs_z: " << format_real(m.peak_abs_z) << "\n";
  out << "evm: " << format_real(m.evm) << "\n";
  out << "norm_ratio: " << format_real(ratio) << "\n";
  out << "self_check_error: " << format_real(tr.self_check_error) << "\n";
  out << "trace: " << (dir / "trace.csv").string() << "\n";
  out << "symbols_csv: " << (dir / "symbols.csv").string() << "\n";
  return {std::move(tr), m, ratio};
}

inline FirPulse cmd_pulse(const RunConfig& c, const CommandOptions& o, std::ostream& out) {
  const auto dir = prepare_output_dir(c, o);
  const auto pulse = config_pulse(c);
  {
    auto f = open_output(dir / "pulse.csv");
    f << "k,tap\n";
    for (int k = 0; k <= pulse.support(); ++k) f << k << "," << format_real(pulse.taps[k]) << "\n";
  }
  out << "taps: " << pulse.taps.size() << "\n";
  out << "energy: " << format_real(pulse.energy()) << "\n";
  out << "peak: " << format_real(pulse.peak()) << "\n";
  for (int s = 1; s * pulse.ratio <= pulse.support(); ++s) out << "gram[" << s << "]: " << format_real(pulse.gram(s)) << "\n";
  out << "pulse_csv: " << (dir / "pulse.csv").string() << "\n";
  return pulse;
}

struct NormResult {
  double spectral_radius;
  double closed_loop_norm;
  double open_loop_norm;  // |T11|, the error with the canceler switched off
  bool certified;
};

inline NormResult cmd_norm(const RunConfig& c, const std::string& controller_path, const CommandOptions&,
                           std::ostream& out) {
  const auto art = load_matching_artifact(c, controller_path);
  const auto plant = build_generalized_plant(c.relay, config_pulse(c));
  const auto cl = close_loop(plant.sigma, art.controller.inner);
  const double radius = spectral_radius(cl.a());
  out << "closed_loop_spectral_radius: " << format_real(radius) << "\n";
  if (!(radius < 1.0 - kStabilityMargin)) {
    out << "stable: false\n";
    throw NumericalError("norm: closed loop is not stable");
  }
  const auto& s = plant.sigma;
  const DiscreteStateSpace t11(s.sys.a(), s.b1(), s.c1(), s.d11(), s.sys.period());
  NormResult r{radius, hinf_norm(cl, 1e-10), hinf_norm(t11, 1e-10), false};
  r.certified = r.closed_loop_norm <= art.gamma_opt * (1.0 + 1e-4);
  out << "stable: true\n";
  out << "closed_loop_hinf_norm: " << format_real(r.closed_loop_norm) << "\n";
  out << "open_loop_hinf_norm: " << format_real(r.open_loop_norm) << "\n";
  out << "gamma_opt: " << format_real(art.gamma_opt) << "\n";
  out << "certified: " << (r.certified ? "true" : "false") << "\n";
  if (!r.certified) throw NumericalError("norm: closed-loop norm exceeds gamma_opt");
  return r;
}

}  // namespace relay
