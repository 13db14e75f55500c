#include "biphoton/scenario.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "biphoton/correlation.hpp"
#include "biphoton/emccd.hpp"
#include "biphoton/grid_io.hpp"
#include "biphoton/spdc.hpp"
#include "biphoton/stats.hpp"
#include "biphoton/zernike.hpp"

namespace biphoton {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_pgm_values(const fs::path& path, std::size_t nx, std::size_t ny,
                      std::span<const double> values, bool log_scale);

// Collects written files so the manifest can list them in write order.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }
  void added(const std::string& name) {
    const fs::path p = path(name);
    artifacts_.push_back({name, fs::file_size(p), fnv1a64_hex(p)});
  }

  void field(const std::string& name, const RealField& f, PayloadKind kind = PayloadKind::Field,
             std::vector<double> meta = {}) {
    write_field(path(name), f, kind, std::move(meta));
    added(name);
  }
  void profile(const std::string& name, const RealField& f, const std::string& column) {
    write_profile_csv(path(name), f, column);
    added(name);
  }
  // Cut along x through y = 0 of a 2D field.
  void cut(const std::string& name, const RealField& f, const std::string& column) {
    profile(name, cross_section(f, 1, 0.0), column);
  }
  void pgm(const std::string& name, const RealField& f, bool log_scale) {
    write_pgm(path(name), f, log_scale);
    added(name);
  }
  void text(const std::string& name, const std::string& body) {
    std::ofstream out(path(name), std::ios::binary);
    out << body;
    if (!out) throw IoError("cannot write " + path(name).string());
    out.close();
    added(name);
  }

  // Offsets and values along dx at dy = 0.
  void map_cut(const std::string& name, const CoincidenceMap& m) {
    std::ofstream csv(path(name), std::ios::binary);
    csv << "dx,coincidence\n";
    char buf[64];
    for (long dx = -static_cast<long>(m.half_x); dx <= static_cast<long>(m.half_x); ++dx) {
      std::snprintf(buf, sizeof buf, "%ld,%.17g\n", dx, m.at(dx, 0));
      csv << buf;
    }
    if (!csv) throw IoError("cannot write " + path(name).string());
    csv.close();
    added(name);
  }
  void map_pgm(const std::string& name, const CoincidenceMap& m) {
    write_pgm_values(path(name), m.nx(), m.ny(), m.values, false);
    added(name);
  }

  std::vector<Artifact>& artifacts() { return artifacts_; }

 private:
  fs::path dir_;
  std::vector<Artifact> artifacts_;
};

Grid photon_grid(const json& c) {
  const auto n = c["grid"]["n"].get<std::size_t>();
  const double dk = c["grid"]["spacing"].get<double>();
  return Grid::plane(n, dk, n, dk);
}

Grid photon_line(const json& c) {
  return Grid::line(c["grid"]["n"].get<std::size_t>(), c["grid"]["spacing"].get<double>());
}

SigmaPair source_sigmas(const json& c) {
  if (c.contains("sigmas")) {
    return {c["sigmas"]["sigma_plus"].get<double>(), c["sigmas"]["sigma_minus"].get<double>()};
  }
  if (c.contains("spdc")) {
    const auto& p = c["spdc"];
    return derive_sigmas({p["w0"].get<double>(), p["L"].get<double>(), p["lambda_p"].get<double>(),
                          p["n_p"].get<double>()});
  }
  return sigmas_for_schmidt(c["schmidt"]["K"].get<double>(), c["schmidt"]["sigma_minus"].get<double>());
}

ParityFilter parity_filter(const std::string& s) {
  if (s == "even") return ParityFilter::EvenOnly;
  if (s == "odd") return ParityFilter::OddOnly;
  return ParityFilter::All;
}

std::uint64_t seed_of(const json& c) {
  return c.contains("seed") && !c["seed"].is_null() ? c["seed"].get<std::uint64_t>() : 0;
}

PhaseMask harmonic_mask(const Grid& grid, double a, double b, double f) {
  if (grid.rank() != 1) throw DomainError("mask.kind harmonic needs a 1D grid");
  PhaseMask mask = zero_mask(grid);
  for (std::size_t i = 0; i < grid.axis(0).n; ++i) {
    const double k = grid.axis(0).coordinate(i);
    mask.phase.values[i] = a * std::cos(f * k) + b * std::sin(f * k);
  }
  return mask;
}

PhaseMask build_mask(const ScenarioConfig& cfg, const Grid& grid) {
  const json& m = cfg.resolved["mask"];
  const std::string kind = m["kind"].get<std::string>();
  const std::uint64_t seed = seed_of(cfg.resolved);
  if (kind == "none") return zero_mask(grid);
  if (kind == "harmonic") {
    return harmonic_mask(grid, m["cos"].get<double>(), m["sin"].get<double>(), m["frequency"].get<double>());
  }
  if (kind == "zernike") {
    return mask_from_coeffs(dm_config_from_json({{"coefficients", m["coefficients"]},
                                                 {"pupil_radius", m["pupil_radius"]}}),
                            grid);
  }
  if (kind == "random-zernike") {
    return mask_from_coeffs(random_mask(parity_filter(m["parity"].get<std::string>()),
                                        m["amplitude"].get<double>(), seed, m["pupil_radius"].get<double>()),
                            grid);
  }
  if (kind == "smoothed") {
    std::optional<double> pupil;
    if (!m["pupil_radius"].is_null()) pupil = m["pupil_radius"].get<double>();
    return smoothed_random_mask(grid, m["correlation_length"].get<double>(), m["rms"].get<double>(),
                                seed, pupil, parity_filter(m["parity"].get<std::string>()));
  }
  if (kind == "white") return white_random_mask(grid, m["pupil_radius"].get<double>(), seed);
  const fs::path file = cfg.resolve_path(m["path"].get<std::string>());
  if (kind == "dm-file") return mask_from_coeffs(read_dm_config(file), grid);
  PhaseMask mask = read_phase_mask(file);
  if (!mask.grid().matches(grid)) {
    throw ShapeError("mask file " + file.string() + " does not match the configured grid");
  }
  return mask;
}

DetectorModel detector_model(const json& d) {
  DetectorModel m;
  m.width = d["width"].get<std::size_t>();
  m.height = d["height"].get<std::size_t>();
  m.pairs_per_frame_mean = d["pairs_per_frame_mean"].get<double>();
  m.dark_electron_mean = d["dark_electron_mean"].get<double>();
  m.readout_std = d["readout_std"].get<double>();
  m.gain = d["gain"].get<double>();
  m.threshold_batch = d["threshold_batch"].get<std::size_t>();
  m.validate();
  return m;
}

Window window_of(const json& w) { return {w["half_x"].get<std::size_t>(), w["half_y"].get<std::size_t>()}; }

void write_pgm_values(const fs::path& path, std::size_t nx, std::size_t ny,
                      std::span<const double> values, bool log_scale) {
  double lo = values.empty() ? 0.0 : values[0];
  double hi = lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  lo = std::min(lo, 0.0);
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << ny << " " << nx << "\n255\n";
  for (double v : values) {
    double t = 0.0;
    if (log_scale) {
      t = hi > 0.0 && v > 0.0 ? 1.0 + std::log10(std::max(v / hi, 1e-4)) / 4.0 : 0.0;
    } else if (hi > lo) {
      t = (v - lo) / (hi - lo);
    }
    out.put(static_cast<char>(std::lround(255.0 * std::clamp(t, 0.0, 1.0))));
  }
  if (!out) throw IoError("cannot write " + path.string());
}

// Pearson over all offsets except (0, 0), which holds singles.
double pearson_off_origin(const CoincidenceMap& a, const CoincidenceMap& b) {
  std::vector<double> x, y;
  for (long dx = -static_cast<long>(a.half_x); dx <= static_cast<long>(a.half_x); ++dx) {
    for (long dy = -static_cast<long>(a.half_y); dy <= static_cast<long>(a.half_y); ++dy) {
      if (dx == 0 && dy == 0) continue;
      x.push_back(a.at(dx, dy));
      y.push_back(b.at(dx, dy));
    }
  }
  return pearson_correlation(x, y);
}

// ---- scenarios --------------------------------------------------------------

void run_fig1(const ScenarioConfig& cfg, Outputs& out, RunReport& r) {
  const json& c = cfg.resolved;
  const Grid photon = photon_line(c);
  const SigmaPair s = source_sigmas(c);
  const PhaseMask mask = build_mask(cfg, photon);
  const auto parts = parity_decompose(mask);
  const std::vector<std::pair<std::string, const PhaseMask*>> cases = {
      {"none", nullptr}, {"full", &mask}, {"even", &parts.even}, {"odd", &parts.odd}};
  const PhaseMask none = zero_mask(photon);
  std::map<std::string, CorrelationMap> tp;
  std::map<std::string, PumpPattern> pump;
  for (const auto& [name, m] : cases) {
    const PhaseMask& mk = m ? *m : none;
    tp[name] = delta_approx_correlation(mk, s.sigma_minus);
    pump[name] = aux_pump_intensity(mk, s.sigma_minus);
    out.field("twophoton_" + name + ".bin", tp[name].map, PayloadKind::CorrelationMap);
    out.field("pump_" + name + ".bin", pump[name].intensity, PayloadKind::PumpPattern);
    out.profile("twophoton_" + name + ".csv", tp[name].map, "coincidence");
    out.profile("pump_" + name + ".csv", pump[name].intensity, "intensity");
    r.metrics["pump_vs_twophoton_" + name] = compare_patterns(tp[name], pump[name]);
  }
  out.field("mask.bin", mask.phase, PayloadKind::PhaseMask,
            {mask.pupil_radius ? *mask.pupil_radius : std::nan("")});
  r.metrics["twophoton_full_vs_even"] = pearson_correlation(tp["full"].map, tp["even"].map);
  r.metrics["twophoton_odd_vs_none"] = pearson_correlation(tp["odd"].map, tp["none"].map);
  r.metrics["twophoton_full_vs_none"] = pearson_correlation(tp["full"].map, tp["none"].map);
  r.metrics["pump_full_vs_even"] = pearson_correlation(pump["full"].intensity, pump["even"].intensity);
  r.metrics["pump_odd_vs_none"] = pearson_correlation(pump["odd"].intensity, pump["none"].intensity);
  r.metrics["schmidt_number"] = schmidt_number(s);

  if (c["full_path"].get<bool>()) {
    const auto psi = build_two_photon_amplitude(photon, s);
    std::map<std::string, CorrelationMap> full;
    for (const auto& [name, m] : cases) {
      const auto C = full_correlation(m ? apply_mask_pair(psi, *m) : psi);
      full[name] = difference_projection(C.C);
      out.profile("fullpath_" + name + ".csv", full[name].map, "coincidence");
      r.metrics["fullpath_vs_delta_" + name] = pearson_correlation(full[name].map, tp[name].map);
    }
    r.metrics["fullpath_full_vs_even"] = pearson_correlation(full["full"].map, full["even"].map);
    r.metrics["fullpath_odd_vs_none"] = pearson_correlation(full["odd"].map, full["none"].map);
  }
}

void run_gallery(const ScenarioConfig& cfg, Outputs& out, RunReport& r) {
  const json& c = cfg.resolved;
  const Grid grid = photon_grid(c);
  const auto images = zernike_gallery(grid, c["pupil_radius"].get<double>(), c["amplitude"].get<double>(),
                                      c["beam_waist"].get<double>());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int j = kFirstDisorderIndex + static_cast<int>(i);
    const std::string tag = "Z" + std::to_string(j);
    out.field("farfield_" + tag + ".bin", images[i]);
    out.cut("farfield_" + tag + "_x.csv", images[i], "intensity");
    r.metrics["centrosymmetry_" + tag] = pearson_correlation(images[i], point_reflect(images[i]));
    r.metrics["speckle_contrast_" + tag] = speckle_contrast(images[i]);
    if (c["render"].get<bool>()) out.pgm("farfield_" + tag + ".pgm", images[i], false);
  }
  r.notes.push_back("centrosymmetry_Zj = Pearson(I(x), I(-x)); an even polynomial gives 1.");
}

void run_parity(const ScenarioConfig& cfg, Outputs& out, RunReport& r) {
  const json& c = cfg.resolved;
  const Grid photon = photon_grid(c);
  const SigmaPair s = source_sigmas(c);
  const double mult = c["pump_phase_multiplier"].get<double>();
  const PhaseMask mask = build_mask(cfg, photon);
  const PhaseMask none = zero_mask(photon);
  const auto tp = delta_approx_correlation(mask, s.sigma_minus);
  const auto tp0 = delta_approx_correlation(none, s.sigma_minus);
  const auto pump = aux_pump_intensity(mask, s.sigma_minus, mult);
  const auto pump0 = aux_pump_intensity(none, s.sigma_minus, mult);
  out.field("mask.bin", mask.phase, PayloadKind::PhaseMask,
            {mask.pupil_radius ? *mask.pupil_radius : std::nan("")});
  out.field("twophoton.bin", tp.map, PayloadKind::CorrelationMap);
  out.field("twophoton_nodisorder.bin", tp0.map, PayloadKind::CorrelationMap);
  out.field("pump.bin", pump.intensity, PayloadKind::PumpPattern);
  out.cut("twophoton_x.csv", tp.map, "coincidence");
  out.cut("pump_x.csv", pump.intensity, "intensity");
  if (c["render"].get<bool>()) {
    out.pgm("twophoton.pgm", tp.map, false);
    out.pgm("pump.pgm", pump.intensity, false);
  }
  r.metrics["twophoton_vs_nodisorder"] = pearson_correlation(tp.map, tp0.map);
  r.metrics["pump_vs_nodisorder"] = pearson_correlation(pump.intensity, pump0.intensity);
  r.metrics["pump_speckle_contrast"] = speckle_contrast(pump.intensity);
  r.metrics["pump_speckle_contrast_nodisorder"] = speckle_contrast(pump0.intensity);
  r.metrics["compare_patterns"] = compare_patterns(tp, pump);
  r.metrics["kernel_leakage"] = tp.kernel_leakage;
  r.notes.push_back("speckle contrasts are taken over the whole pump image; the undisordered spot "
                    "is listed as the baseline and pump_vs_nodisorder measures the change of shape.");
}

void run_strong(const ScenarioConfig& cfg, Outputs& out, RunReport& r) {
  const json& c = cfg.resolved;
  const Grid photon = photon_grid(c);
  const SigmaPair s = source_sigmas(c);
  const PhaseMask mask = build_mask(cfg, photon);
  const auto parts = parity_decompose(mask);
  const auto tp_full = delta_approx_correlation(mask, s.sigma_minus);
  const auto tp_even = delta_approx_correlation(parts.even, s.sigma_minus);
  const auto pump_even = aux_pump_intensity(parts.even, s.sigma_minus);
  const auto pump_full = aux_pump_intensity(mask, s.sigma_minus);
  out.field("mask.bin", mask.phase, PayloadKind::PhaseMask,
            {mask.pupil_radius ? *mask.pupil_radius : std::nan("")});
  out.field("delta_full.bin", tp_full.map, PayloadKind::CorrelationMap);
  out.field("pump_even.bin", pump_even.intensity, PayloadKind::PumpPattern);
  out.field("pump_full.bin", pump_full.intensity, PayloadKind::PumpPattern);
  out.cut("delta_full_x.csv", tp_full.map, "coincidence");
  r.metrics["schmidt_number"] = schmidt_number(s);
  r.metrics["sigma_ratio"] = s.ratio();
  r.metrics["delta_full_vs_even"] = pearson_correlation(tp_full.map, tp_even.map);
  r.metrics["compare_patterns_even"] = compare_patterns(tp_even, pump_even);
  r.metrics["compare_patterns_full"] = compare_patterns(tp_full, pump_full);
  r.metrics["pump_speckle_contrast"] = speckle_contrast(pump_full.intensity);
  r.metrics["kernel_leakage"] = tp_full.kernel_leakage;
  if (c["render"].get<bool>()) {
    out.pgm("delta_full.pgm", tp_full.map, false);
    out.pgm("pump_even.pgm", pump_even.intensity, false);
  }
  if (c["full_path"].get<bool>()) {
    SliceOptions opt;
    opt.prune_mass = c["prune_mass"].get<double>();
    const auto full = sliced_difference_projection(photon, s, mask, opt);
    const auto even = sliced_difference_projection(photon, s, parts.even, opt);
    out.field("twophoton_full.bin", full.map, PayloadKind::CorrelationMap);
    out.field("twophoton_even.bin", even.map, PayloadKind::CorrelationMap);
    out.cut("twophoton_full_x.csv", full.map, "coincidence");
    out.cut("twophoton_even_x.csv", even.map, "coincidence");
    if (c["render"].get<bool>()) {
      out.pgm("twophoton_full.pgm", full.map, false);
      out.pgm("twophoton_even.pgm", even.map, false);
    }
    r.metrics["full_vs_even"] = pearson_correlation(full.map, even.map);
    r.metrics["full_vs_delta"] = pearson_correlation(full.map, tp_full.map);
    r.metrics["compare_patterns_even_fullpath"] = compare_patterns(even, pump_even);
  }
}

void run_emccd(const ScenarioConfig& cfg, Outputs& out, RunReport& r) {
  const json& c = cfg.resolved;
  const Grid photon = photon_grid(c);
  const SigmaPair s = source_sigmas(c);
  const DetectorModel model = detector_model(c["detector"]);
  const Window w = window_of(c["window"]);
  const auto frames = c["frames"].get<std::size_t>();
  const auto save = std::min(frames, c["save_frames"].get<std::size_t>());
  const std::uint64_t seed = seed_of(c);

  const PhaseMask mask = build_mask(cfg, photon);
  const auto D = delta_approx_correlation(mask, s.sigma_minus);
  CoincidenceMap truth = crop_offsets(D.map, w.half_x, w.half_y);
  CoincidenceMap symmetric = truth;
  for (long dx = -static_cast<long>(w.half_x); dx <= static_cast<long>(w.half_x); ++dx) {
    for (long dy = -static_cast<long>(w.half_y); dy <= static_cast<long>(w.half_y); ++dy) {
      symmetric.at(dx, dy) = 0.5 * (truth.at(dx, dy) + truth.at(-dx, -dy));
    }
  }
  std::optional<double> centroid;
  if (!c["centroid_sigma_px"].is_null()) centroid = c["centroid_sigma_px"].get<double>();
  const DifferenceMapSampler sampler(truth, model, centroid);

  CoincidenceAccumulator acc(model.width, model.height, w, CoincidenceKind::Difference);
  FrameStack kept(model);
  double photons = 0.0;
  PhotonFrame first;
  stream_frames(sampler, model, frames, seed, [&](const PhotonFrame& f) {
    if (acc.frames() == 0) first = f;
    if (kept.size() < save) kept.push_back(f);
    photons += static_cast<double>(f.count());
    acc.add(f);
  });
  const CoincidenceMap map = acc.result();

  CoincidenceAccumulator still(model.width, model.height, w, CoincidenceKind::Difference);
  for (int i = 0; i < 10; ++i) still.add(first);
  double static_max = 0.0;
  for (double v : still.result().values) static_max = std::max(static_max, std::abs(v));

  write_coincidence_map(out.path("coincidence.bin"), map);
  out.added("coincidence.bin");
  write_coincidence_map(out.path("truth.bin"), symmetric);
  out.added("truth.bin");
  out.map_cut("coincidence_x.csv", map);
  out.map_cut("truth_x.csv", symmetric);
  if (save > 0) {
    write_frame_stack(out.path("frames.bin"), kept);
    out.added("frames.bin");
  }
  if (c["render"].get<bool>()) out.map_pgm("coincidence.pgm", map);
  r.metrics["pearson_vs_truth"] = pearson_off_origin(map, symmetric);
  r.metrics["mean_photons_per_frame"] = photons / static_cast<double>(frames);
  r.metrics["singles_bin"] = map.at(0, 0);
  r.metrics["static_pattern_max_abs"] = static_max;
  r.notes.push_back("pearson_vs_truth excludes offset (0, 0), which holds the singles count; the "
                    "truth map is the point-symmetrized delta-path map on the detector lattice.");
}

void run_schmidt(const ScenarioConfig& cfg, Outputs& out, RunReport& r) {
  const json& c = cfg.resolved;
  const SigmaPair s = source_sigmas(c);
  const DetectorModel model = detector_model(c["detector"]);
  const Window w = window_of(c["window"]);
  const auto frames = c["frames"].get<std::size_t>();
  const double pitch = 1.0 / (std::numbers::sqrt2 * s.sigma_plus) / c["sigma_j_px"].get<double>();
  const auto sampler = DoubleGaussianSampler::from_sigmas(s, pitch, model);

  CoincidenceAccumulator acc(model.width, model.height, w, CoincidenceKind::Sum, true);
  RealImage marginal(Grid::plane(model.width, 1.0, model.height, 1.0));
  stream_frames(sampler, model, frames, seed_of(c), [&](const PhotonFrame& f) {
    for (std::size_t x = 0; x < model.width; ++x) {
      for (std::size_t y = 0; y < model.height; ++y) {
        if (f.get(x, y)) marginal.at(x, y) += 1.0;
      }
    }
    acc.add(f);
  });
  for (auto& v : marginal.values) v /= static_cast<double>(frames);
  const CoincidenceMap sum_map = acc.result();
  const SchmidtEstimate est = estimate_schmidt(marginal, sum_map);

  out.field("marginal.bin", marginal);
  write_coincidence_map(out.path("sum_coincidence.bin"), sum_map);
  out.added("sum_coincidence.bin");
  out.cut("marginal_x.csv", marginal, "mean_photons");
  out.map_cut("sum_coincidence_x.csv", sum_map);
  if (c["render"].get<bool>()) {
    out.pgm("marginal.pgm", marginal, false);
    out.map_pgm("sum_coincidence.pgm", sum_map);
  }
  const double widths_K = std::pow(sampler.sigma_m() / sampler.sigma_j(), 2.0);
  r.metrics["K_hat"] = est.K;
  r.metrics["K_stderr"] = est.K_stderr;
  r.metrics["sigma_m_px"] = est.sigma_m;
  r.metrics["sigma_j_px"] = est.sigma_j;
  r.metrics["K_widths"] = widths_K;
  r.metrics["K_closed_form"] = schmidt_number(s);
  r.metrics["K_relative_error"] = est.K / widths_K - 1.0;
  r.metrics["pixel_pitch"] = pitch;
  r.notes.push_back("K_widths = (sigma_m/sigma_j)^2 of the simulated source, the quantity the "
                    "width estimator targets; K_closed_form is the exact double-Gaussian value.");
}

void run_speckle(const ScenarioConfig& cfg, Outputs& out, RunReport& r) {
  const json& c = cfg.resolved;
  const Grid grid = photon_grid(c);
  const auto count = c["realizations"].get<std::size_t>();
  const double pupil = c["pupil_radius"].get<double>();
  std::vector<double> kappa;
  for (std::size_t i = 0; i < count; ++i) {
    const auto image = far_field_intensity(white_random_mask(grid, pupil, frame_seed(seed_of(c), i)),
                                           std::numeric_limits<double>::infinity());
    kappa.push_back(speckle_contrast(image));
    if (i == 0) {
      out.field("speckle_0.bin", image);
      out.cut("speckle_0_x.csv", image, "intensity");
      if (c["render"].get<bool>()) out.pgm("speckle_0.pgm", image, false);
    }
  }
  const auto ms = mean_std(kappa);
  r.metrics["kappa_mean"] = ms.mean;
  r.metrics["kappa_std"] = ms.stddev;
  r.metrics["kappa_min"] = *std::min_element(kappa.begin(), kappa.end());
  r.metrics["kappa_max"] = *std::max_element(kappa.begin(), kappa.end());
  r.metrics["uniform_field_kappa"] = speckle_contrast(std::vector<double>(grid.size(), 1.0));
  r.notes.push_back("laboratory contrast values of 0.89 and 0.96 are reference points only; they "
                    "depend on the optical hardware and are not simulated here.");
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

double RunReport::metric(const std::string& name) const {
  const auto it = metrics.find(name);
  if (it == metrics.end()) throw DomainError("no metric named " + name);
  return it->second;
}

std::uintmax_t estimate_peak_bytes(const ScenarioConfig& cfg) {
  const json& c = cfg.resolved;
  auto grid_n = [&] { return static_cast<double>(c["grid"]["n"].get<std::size_t>()); };
  auto sensor = [&] {
    const auto& d = c["detector"];
    const double w = d["width"].get<double>();
    const double h = d["height"].get<double>();
    const double batch = d["threshold_batch"].get<double>();
    return batch * w * h * 8.0 + 4.0 * (2.0 * w) * (2.0 * h) * 16.0;
  };
  double bytes = 0.0;
  switch (cfg.kind) {
    case ScenarioKind::Fig1Demo: {
      const double n = grid_n();
      bytes = 200.0 * n * 16.0;
      if (c["full_path"].get<bool>()) bytes += 5.0 * n * n * 16.0;
      break;
    }
    case ScenarioKind::ZernikeGallery: bytes = 16.0 * std::pow(grid_n(), 2) * 16.0; break;
    case ScenarioKind::ParityExperiment: bytes = 12.0 * std::pow(grid_n(), 2) * 16.0; break;
    case ScenarioKind::StrongDisorder2D: bytes = 20.0 * std::pow(grid_n(), 2) * 16.0; break;
    case ScenarioKind::EmccdPipeline: {
      const auto& d = c["detector"];
      const double frame_bytes = d["width"].get<double>() * d["height"].get<double>() / 8.0;
      bytes = sensor() + 10.0 * std::pow(grid_n(), 2) * 16.0 +
              c["save_frames"].get<double>() * frame_bytes;
      break;
    }
    case ScenarioKind::SchmidtEstimate: bytes = sensor(); break;
    case ScenarioKind::SpeckleContrast: bytes = 6.0 * std::pow(grid_n(), 2) * 16.0; break;
  }
  return static_cast<std::uintmax_t>(bytes);
}

RunReport run_scenario(const ScenarioConfig& cfg) {
  const double limit = cfg.resolved["max_memory_mb"].get<double>() * 1024.0 * 1024.0;
  const auto need = estimate_peak_bytes(cfg);
  if (static_cast<double>(need) > limit) {
    throw ResourceError("scenario needs about " + std::to_string(need / (1024 * 1024)) +
                        " MB, above max_memory_mb = " + format_value(cfg.resolved["max_memory_mb"].get<double>()));
  }
  RunReport r;
  r.kind = cfg.kind;
  r.config = cfg.resolved;
  Outputs out(cfg.output_dir());
  switch (cfg.kind) {
    case ScenarioKind::Fig1Demo: run_fig1(cfg, out, r); break;
    case ScenarioKind::ZernikeGallery: run_gallery(cfg, out, r); break;
    case ScenarioKind::ParityExperiment: run_parity(cfg, out, r); break;
    case ScenarioKind::StrongDisorder2D: run_strong(cfg, out, r); break;
    case ScenarioKind::EmccdPipeline: run_emccd(cfg, out, r); break;
    case ScenarioKind::SchmidtEstimate: run_schmidt(cfg, out, r); break;
    case ScenarioKind::SpeckleContrast: run_speckle(cfg, out, r); break;
  }

  out.text("config.json", cfg.resolved.dump(2) + "\n");
  json metrics = json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = v;
  out.text("metrics.json",
           json{{"scenario", std::string(scenario_name(cfg.kind))}, {"metrics", metrics}}.dump(2) + "\n");

  std::ostringstream report;
  report << "scenario: " << scenario_name(cfg.kind) << "\n\nmetrics\n";
  for (const auto& [k, v] : r.metrics) report << "  " << k << " = " << format_value(v) << "\n";
  if (!r.notes.empty()) {
    report << "\nnotes\n";
    for (const auto& n : r.notes) report << "  " << n << "\n";
  }
  report << "\nartifacts\n";
  for (const auto& a : out.artifacts()) report << "  " << a.fnv1a64 << "  " << a.bytes << "  " << a.path << "\n";
  out.text("report.txt", report.str());

  json manifest = json::array();
  for (const auto& a : out.artifacts()) {
    manifest.push_back({{"path", a.path}, {"bytes", a.bytes}, {"fnv1a64", a.fnv1a64}});
  }
  std::ofstream(out.path("manifest.json"), std::ios::binary) << manifest.dump(2) << "\n";
  r.artifacts = out.artifacts();
  return r;
}

std::string fnv1a64_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void write_pgm(const fs::path& path, const RealField& image, bool log_scale) {
  if (image.grid.rank() != 2) throw ShapeError("write_pgm needs a 2D field");
  write_pgm_values(path, image.grid.axis(0).n, image.grid.axis(1).n, image.values, log_scale);
}

void render_grid_file(const fs::path& in, const fs::path& out, bool log_scale) {
  const GridFile f = read_grid_file(in);
  const auto& h = f.header;
  if (h.shape.size() != 2) throw SchemaError(in.string() + ": only rank-2 arrays can be rendered");
  const std::size_t nx = h.shape[0];
  const std::size_t ny = h.shape[1];
  std::vector<double> img(nx * ny, 0.0);
  if (h.dtype == Dtype::Float64 && h.kind != PayloadKind::FrameStack) {
    std::memcpy(img.data(), f.payload.data(), img.size() * sizeof(double));
  } else if (h.dtype == Dtype::UInt8 && h.kind == PayloadKind::FrameStack) {
    for (std::size_t i = 0; i < f.payload.size(); ++i) img[i % img.size()] += f.payload[i];
  } else {
    throw SchemaError(in.string() + ": unsupported payload for rendering");
  }
  write_pgm_values(out, nx, ny, img, log_scale);
}

}  // namespace biphoton
