#include "jumpdesign/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "jumpdesign/image_io.hpp"
#include "jumpdesign/random.hpp"
#include "jumpdesign/synthetic.hpp"

namespace jumpdesign {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

std::uint64_t to_unsigned(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a nonnegative integer: '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw std::invalid_argument("not a boolean: '" + s + "'");
}

std::string kde_rule_name(KdeBandwidthRule r) { return r == KdeBandwidthRule::Fixed ? "fixed" : "rule-of-thumb"; }

std::string opt_metric(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

struct Accum {
  std::size_t n = 0;
  double sum = 0.0;
  double sum_sq_dev = 0.0;  // Welford
  double mean = 0.0;
  void add(double v) {
    ++n;
    sum += v;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    sum_sq_dev += d * (v - mean);
  }
  double sd() const { return n > 1 ? std::sqrt(sum_sq_dev / static_cast<double>(n - 1)) : 0.0; }
};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void ExperimentConfig::validate() const {
  int sources = 0;
  if (!spec_path.empty()) ++sources;
  if (!image_path.empty()) ++sources;
  if (sources > 1) throw std::invalid_argument("set only one of spec and image");
  if (sources == 0 && preset.empty()) throw std::invalid_argument("no input: set preset, spec or image");
  if (!mask_path.empty() && image_path.empty()) throw std::invalid_argument("mask requires image");
  if (sigmas.empty()) throw std::invalid_argument("sigmas is empty");
  for (double s : sigmas) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("sigma " + format_double(s) + " outside [0, 1]");
  }
  if (!(budget_fraction > 0.0 && budget_fraction <= 1.0)) throw std::invalid_argument("budget must lie in (0, 1]");
  if (n_stages == 0) throw std::invalid_argument("stages must be at least 1");
  if (n_replications == 0) throw std::invalid_argument("replications must be at least 1");
  if (samplers.empty()) throw std::invalid_argument("samplers is empty");
  if (k && *k == 0) throw std::invalid_argument("k must be positive");
  if (!(k_log_factor > 0.0)) throw std::invalid_argument("k_log_factor must be positive");
  if (kde_rule == KdeBandwidthRule::Fixed && !(kde_bandwidth > 0.0)) {
    throw std::invalid_argument("fixed kde rule needs kde_bandwidth > 0");
  }
  if (!(jump_band_h >= 0.0)) throw std::invalid_argument("jb_h must be nonnegative");
}

SmootherConfig ExperimentConfig::smoother() const {
  SmootherConfig s;
  s.kernel.family = kernel;
  s.k = k;
  s.k_log_factor = k_log_factor;
  return s;
}

SamplerSpec ExperimentConfig::sampler(Strategy s) const {
  SamplerSpec spec;
  spec.strategy = s;
  spec.kde_rule = kde_rule;
  spec.kde_bandwidth = kde_bandwidth;
  spec.distinct_draws = distinct_draws;
  return spec;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t start = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    pos = end + 1;
    ++line_no;
    std::string_view raw = text.substr(start, end - start);
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no, start);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string val = trim(std::string_view(line).substr(eq + 1));
    try {
      if (key == "preset") {
        c.preset = val;
      } else if (key == "grid") {
        const auto parts = split_list(val);
        if (parts.size() != 2) throw std::invalid_argument("grid takes W H");
        c.preset_grid = GridShape{to_unsigned(parts[0]), to_unsigned(parts[1])};
      } else if (key == "spec") {
        c.spec_path = val;
      } else if (key == "image") {
        c.image_path = val;
      } else if (key == "mask") {
        c.mask_path = val;
      } else if (key == "sigmas") {
        c.sigmas.clear();
        for (const auto& s : split_list(val)) c.sigmas.push_back(to_double(s));
      } else if (key == "budget") {
        c.budget_fraction = to_double(val);
      } else if (key == "stages") {
        c.n_stages = to_unsigned(val);
      } else if (key == "replications") {
        c.n_replications = to_unsigned(val);
      } else if (key == "samplers") {
        c.samplers.clear();
        for (const auto& s : split_list(val)) c.samplers.push_back(parse_strategy(s));
      } else if (key == "k") {
        if (val == "auto") {
          c.k.reset();
        } else {
          c.k = to_unsigned(val);
        }
      } else if (key == "k_log_factor") {
        c.k_log_factor = to_double(val);
      } else if (key == "kernel") {
        c.kernel = parse_kernel_family(val);
      } else if (key == "kde_rule") {
        if (val == "fixed") {
          c.kde_rule = KdeBandwidthRule::Fixed;
        } else if (val == "rule-of-thumb") {
          c.kde_rule = KdeBandwidthRule::RuleOfThumb;
        } else {
          throw std::invalid_argument("kde_rule is 'rule-of-thumb' or 'fixed'");
        }
      } else if (key == "kde_bandwidth") {
        c.kde_bandwidth = to_double(val);
      } else if (key == "distinct_draws") {
        c.distinct_draws = to_bool(val);
      } else if (key == "jb_h") {
        c.jump_band_h = to_double(val);
      } else if (key == "seed") {
        c.seed = to_unsigned(val);
      } else if (key == "output_dir") {
        c.output_dir = val;
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no, start);
    }
    if (end == text.size()) break;
  }
  if (!c.spec_path.empty() || !c.image_path.empty()) c.preset.clear();
  return c;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::string format_experiment_config(const ExperimentConfig& c) {
  std::ostringstream o;
  if (!c.image_path.empty()) {
    o << "image = " << c.image_path.string() << "\n";
    if (!c.mask_path.empty()) o << "mask = " << c.mask_path.string() << "\n";
  } else if (!c.spec_path.empty()) {
    o << "spec = " << c.spec_path.string() << "\n";
  } else {
    o << "preset = " << c.preset << "\n";
    if (c.preset_grid) o << "grid = " << c.preset_grid->width << " " << c.preset_grid->height << "\n";
  }
  o << "sigmas = ";
  for (std::size_t i = 0; i < c.sigmas.size(); ++i) o << (i ? ", " : "") << format_double(c.sigmas[i]);
  o << "\nbudget = " << format_double(c.budget_fraction) << "\n";
  o << "stages = " << c.n_stages << "\n";
  o << "replications = " << c.n_replications << "\n";
  o << "samplers = ";
  for (std::size_t i = 0; i < c.samplers.size(); ++i) o << (i ? ", " : "") << strategy_name(c.samplers[i]);
  o << "\nk = " << (c.k ? std::to_string(*c.k) : std::string("auto")) << "\n";
  o << "k_log_factor = " << format_double(c.k_log_factor) << "\n";
  o << "kernel = " << kernel_family_name(c.kernel) << "\n";
  o << "kde_rule = " << kde_rule_name(c.kde_rule) << "\n";
  if (c.kde_rule == KdeBandwidthRule::Fixed) o << "kde_bandwidth = " << format_double(c.kde_bandwidth) << "\n";
  o << "distinct_draws = " << (c.distinct_draws ? "true" : "false") << "\n";
  o << "jb_h = " << format_double(c.jump_band_h) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "output_dir = " << c.output_dir.string() << "\n";
  return o.str();
}

GroundTruth load_truth(const ExperimentConfig& config) {
  if (!config.image_path.empty()) {
    Image img = read_image(config.image_path, format_from_path(config.image_path));
    if (img.shape.empty()) throw std::invalid_argument("image " + config.image_path.string() + " is empty");
    normalize_max(img);
    Mask mask = config.mask_path.empty() ? Mask(img.shape) : read_mask(config.mask_path, img.shape);
    return truth_from_image(img, std::move(mask));
  }
  if (!config.spec_path.empty()) {
    std::ifstream in(config.spec_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open spec " + config.spec_path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return make_synthetic(parse_synthetic_spec(buf.str()));
  }
  return make_synthetic(synthetic_preset(config.preset, config.preset_grid));
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t replication) {
  return derive_seed(master, static_cast<std::uint64_t>(replication));
}

MetricsReport run_cell(const GroundTruth& truth, const Mask& band, const ExperimentConfig& config, Strategy sampler,
                       double sigma, std::size_t replication) {
  DesignConfig dc;
  dc.sampler = config.sampler(sampler);
  dc.smoother = config.smoother();
  dc.budget_fraction = config.budget_fraction;
  dc.n_stages = config.n_stages;
  dc.sigma = sigma;
  dc.seed = replication_seed(config.seed, replication);
  const DesignResult design = run_sequential_design(truth, dc);
  const EstimateField field = estimate_unsampled(design.data, design.sampled, dc.smoother);
  MetricsReport r = compute_mse(field, truth, band, design.sampled);
  r.sigma = sigma;
  r.sampler = std::string(strategy_name(sampler));
  r.replication = replication;
  r.stage = config.n_stages;
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  const GroundTruth truth = load_truth(config);
  const Mask band = jump_band(truth.jump_mask, config.jump_band_h);
  std::filesystem::create_directories(config.output_dir);

  ExperimentResult result;
  std::ofstream metrics(config.output_dir / "metrics.csv", std::ios::binary);
  if (!metrics) throw std::runtime_error("cannot write " + (config.output_dir / "metrics.csv").string());
  write_metrics_header(metrics);
  result.files.push_back("metrics.csv");

  for (double sigma : config.sigmas) {
    for (Strategy s : config.samplers) {
      for (std::size_t rep = 0; rep < config.n_replications; ++rep) {
        try {
          const MetricsReport r = run_cell(truth, band, config, s, sigma, rep);
          write_metrics_row(metrics, r);
          result.rows.push_back(r);
          if (log) {
            *log << strategy_name(s) << " sigma=" << format_double(sigma) << " rep=" << rep
                 << " j_mse=" << opt_metric(r.j_mse) << " c_mse=" << opt_metric(r.c_mse) << "\n";
          }
        } catch (const std::exception& e) {
          result.failures.push_back({std::string(strategy_name(s)), sigma, rep, e.what()});
          if (log) {
            *log << strategy_name(s) << " sigma=" << format_double(sigma) << " rep=" << rep << " FAILED: " << e.what()
                 << "\n";
          }
        }
      }
    }
  }
  metrics.close();

  std::ofstream manifest(config.output_dir / "manifest.txt", std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot write " + (config.output_dir / "manifest.txt").string());
  manifest << "# jumpdesign " << kVersion << " experiment manifest\n";
  manifest << "# replay: jumpdesign bench --config manifest.txt\n";
  manifest << format_experiment_config(config);
  manifest << "# grid " << (truth.grid ? truth.grid->width : 0) << " " << (truth.grid ? truth.grid->height : 0)
           << ", jump band pixels " << band.count() << "\n";
  for (std::size_t rep = 0; rep < config.n_replications; ++rep) {
    manifest << "# replication " << rep << " seed " << replication_seed(config.seed, rep) << "\n";
  }
  manifest << "# cells " << config.sigmas.size() * config.samplers.size() * config.n_replications << ", ok "
           << result.rows.size() << ", failed " << result.failures.size() << "\n";
  for (const auto& f : result.failures) {
    manifest << "# failed sampler=" << f.sampler << " sigma=" << format_double(f.sigma)
             << " replication=" << f.replication << ": " << f.message << "\n";
  }
  result.files.push_back("manifest.txt");
  for (const auto& f : result.files) manifest << "# file " << f.string() << "\n";
  return result;
}

void write_metrics_header(std::ostream& out) {
  out << "sampler,sigma,replication,stage,j_mse,c_mse,root_j_mse,root_c_mse,n_jb,n_cont\n";
}

void write_metrics_row(std::ostream& out, const MetricsReport& r) {
  const auto root = [](const std::optional<double>& v) -> std::optional<double> {
    if (!v) return std::nullopt;
    return std::sqrt(*v);
  };
  out << r.sampler << ',' << format_double(r.sigma) << ',' << r.replication << ',' << r.stage << ','
      << opt_metric(r.j_mse) << ',' << opt_metric(r.c_mse) << ',' << opt_metric(root(r.j_mse)) << ','
      << opt_metric(root(r.c_mse)) << ',' << r.n_jb << ',' << r.n_cont << '\n';
}

std::vector<MetricsReport> read_metrics_csv(std::istream& in) {
  std::vector<MetricsReport> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t byte = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t this_byte = byte;
    byte += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("sampler,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    if (f.size() != 10) throw ParseError("expected 10 metrics columns", line_no, this_byte);
    try {
      MetricsReport r;
      r.sampler = f[0];
      r.sigma = to_double(f[1]);
      r.replication = to_unsigned(f[2]);
      r.stage = to_unsigned(f[3]);
      if (f[4] != "NA") r.j_mse = to_double(f[4]);
      if (f[5] != "NA") r.c_mse = to_double(f[5]);
      r.n_jb = to_unsigned(f[8]);
      r.n_cont = to_unsigned(f[9]);
      rows.push_back(r);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no, this_byte);
    }
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<MetricsReport>& rows, double signal_range) {
  std::vector<std::string> order;
  struct Cell {
    std::size_t n = 0;
    Accum j, c, rj, rc;
  };
  std::map<std::pair<std::string, double>, Cell> cells;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.sampler) == order.end()) order.push_back(r.sampler);
    Cell& cell = cells[{r.sampler, r.sigma}];
    ++cell.n;
    if (r.j_mse) {
      cell.j.add(*r.j_mse);
      cell.rj.add(std::sqrt(*r.j_mse));
    }
    if (r.c_mse) {
      cell.c.add(*r.c_mse);
      cell.rc.add(std::sqrt(*r.c_mse));
    }
  }
  std::vector<SummaryRow> out;
  for (const auto& name : order) {
    for (const auto& [key, cell] : cells) {
      if (key.first != name) continue;
      SummaryRow s;
      s.sampler = name;
      s.sigma = key.second;
      s.snr_db = key.second > 0.0 ? 20.0 * std::log10(signal_range / key.second)
                                  : std::numeric_limits<double>::infinity();
      s.n = cell.n;
      s.n_j = cell.j.n;
      s.n_c = cell.c.n;
      s.mean_j_mse = cell.j.mean;
      s.sd_j_mse = cell.j.sd();
      s.mean_c_mse = cell.c.mean;
      s.sd_c_mse = cell.c.sd();
      s.mean_root_j_mse = cell.rj.mean;
      s.mean_root_c_mse = cell.rc.mean;
      out.push_back(s);
    }
  }
  return out;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows, double signal_range) {
  out << "# SNR_dB = 20*log10(signal_range/sigma), signal_range = " << format_double(signal_range) << "\n";
  out << "sampler,sigma,snr_db,n,mean_j_mse,sd_j_mse,mean_c_mse,sd_c_mse,mean_root_j_mse,mean_root_c_mse\n";
  for (const auto& s : rows) {
    const auto j = [&](double v) { return s.n_j ? format_double(v) : std::string("NA"); };
    const auto c = [&](double v) { return s.n_c ? format_double(v) : std::string("NA"); };
    out << s.sampler << ',' << format_double(s.sigma) << ',' << (std::isfinite(s.snr_db) ? format_double(s.snr_db) : "inf")
        << ',' << s.n << ',' << j(s.mean_j_mse) << ',' << j(s.sd_j_mse) << ',' << c(s.mean_c_mse) << ','
        << c(s.sd_c_mse) << ',' << j(s.mean_root_j_mse) << ',' << c(s.mean_root_c_mse) << '\n';
  }
}

}  // namespace jumpdesign
