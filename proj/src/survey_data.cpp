#include "surveymix/survey_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "surveymix/errors.hpp"
#include "surveymix/normal_math.hpp"
#include "surveymix/samplers.hpp"
#include "surveymix/serialization.hpp"

namespace surveymix {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double poisson_pmf(double k, double rate) {
  if (k < 0.0 || k != std::floor(k)) return 0.0;
  return std::exp(k * std::log(rate) - rate - std::lgamma(k + 1.0));
}

template <class Components>
void check_weights(const Components& comps, const char* kind) {
  if (comps.empty()) throw ValidationError(std::string(kind) + " mixture has no components");
  double total = 0.0;
  for (const auto& c : comps) {
    if (!(c.weight >= 0.0)) throw ValidationError(std::string(kind) + " mixture weight is negative");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError(std::string(kind) + " mixture weights do not sum to 1");
  }
}

double draw_value(RngStream& rng, const DensitySpec& density) {
  return std::visit(
      Overloaded{
          [&](const NormalMixture& m) {
            std::vector<double> w;
            for (const auto& c : m.components) w.push_back(c.weight);
            const auto& c = m.components[sample_categorical(rng, w)];
            return sample_normal(rng, c.mean, c.sd);
          },
          [&](const PoissonMixture& m) {
            std::vector<double> w;
            for (const auto& c : m.components) w.push_back(c.weight);
            const auto& c = m.components[sample_categorical(rng, w)];
            return static_cast<double>(sample_poisson(rng, c.rate));
          }},
      density.variant);
}

std::vector<double> generate_stratum(const StratumSpec& s, std::uint64_t seed, std::size_t index) {
  RngStream rng(seed, 2 * index);
  std::vector<double> values(static_cast<std::size_t>(s.population_size));
  for (double& v : values) v = draw_value(rng, s.density);
  return values;
}

void sample_stratum(const std::vector<double>& values, const StratumSpec& s, std::uint64_t seed,
                    std::size_t index, SurveySample& out) {
  if (s.sample_size > static_cast<std::int64_t>(values.size())) {
    throw ValidationError("stratum " + std::to_string(s.id) + ": sample size exceeds population");
  }
  RngStream rng(seed, 2 * index + 1);
  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto n = static_cast<std::size_t>(s.sample_size);
  const double weight = static_cast<double>(s.population_size) / static_cast<double>(s.sample_size);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng.engine())]);
    out.records.push_back({values[idx[i]], s.id});
    out.weights.push_back(weight);
  }
}

}  // namespace

double DensitySpec::mean() const {
  return std::visit(Overloaded{[](const NormalMixture& m) {
                                 double acc = 0.0;
                                 for (const auto& c : m.components) acc += c.weight * c.mean;
                                 return acc;
                               },
                               [](const PoissonMixture& m) {
                                 double acc = 0.0;
                                 for (const auto& c : m.components) acc += c.weight * c.rate;
                                 return acc;
                               }},
                    variant);
}

double DensitySpec::evaluate(double y) const {
  return std::visit(Overloaded{[y](const NormalMixture& m) {
                                 double acc = 0.0;
                                 for (const auto& c : m.components) {
                                   acc += c.weight * normal_pdf(y, c.mean, c.sd);
                                 }
                                 return acc;
                               },
                               [y](const PoissonMixture& m) {
                                 double acc = 0.0;
                                 for (const auto& c : m.components) {
                                   acc += c.weight * poisson_pmf(y, c.rate);
                                 }
                                 return acc;
                               }},
                    variant);
}

void DensitySpec::validate() const {
  std::visit(Overloaded{[](const NormalMixture& m) {
                          check_weights(m.components, "normal");
                          for (const auto& c : m.components) {
                            if (!(c.sd > 0.0)) throw ValidationError("normal component sd must be positive");
                          }
                        },
                        [](const PoissonMixture& m) {
                          check_weights(m.components, "poisson");
                          for (const auto& c : m.components) {
                            if (!(c.rate > 0.0)) throw ValidationError("poisson component rate must be positive");
                          }
                        }},
             variant);
}

PopulationSpec PopulationSpec::from_strata(std::vector<StratumSpec> strata) {
  PopulationSpec spec;
  spec.strata = std::move(strata);
  for (const auto& s : spec.strata) spec.total_size += s.population_size;
  return spec;
}

void PopulationSpec::validate() const {
  if (strata.empty()) throw ValidationError("population has no strata");
  std::set<int> ids;
  std::int64_t total = 0;
  const bool count = strata.front().density.is_count();
  for (const auto& s : strata) {
    const std::string name = "stratum " + std::to_string(s.id);
    if (!ids.insert(s.id).second) throw ValidationError(name + ": duplicate stratum id");
    if (s.sample_size <= 0 || s.sample_size > s.population_size) {
      throw ValidationError(name + ": need 0 < sample_size <= population_size");
    }
    try {
      s.density.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(name + ": " + e.what());
    }
    if (s.density.is_count() != count) throw ValidationError(name + ": mixed observation spaces");
    total += s.population_size;
  }
  if (total != total_size) throw ValidationError("total_size does not equal the sum of stratum sizes");
}

bool PopulationSpec::is_count() const { return !strata.empty() && strata.front().density.is_count(); }

double PopulationSpec::population_density(double y) const {
  double acc = 0.0;
  for (const auto& s : strata) {
    acc += static_cast<double>(s.population_size) / static_cast<double>(total_size) * s.density.evaluate(y);
  }
  return acc;
}

std::vector<double> SurveySample::values() const {
  std::vector<double> out(records.size());
  std::transform(records.begin(), records.end(), out.begin(), [](const SurveyRecord& r) { return r.value; });
  return out;
}

void SurveySample::validate() const {
  if (records.empty()) throw ValidationError("sample has no records");
  if (weights.size() != records.size()) throw ValidationError("weights and records differ in length");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw ValidationError("record " + std::to_string(i) + ": weight must be positive");
    }
  }
  if (population_size <= 0) throw ValidationError("population_size must be positive");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double y = records[i].value;
    if (!std::isfinite(y)) throw ValidationError("record " + std::to_string(i) + ": value is not finite");
    if (space == ObservationSpace::Count && (y < 0.0 || y != std::floor(y))) {
      throw ValidationError("record " + std::to_string(i) + ": count must be a nonnegative integer");
    }
  }
}

Population generate_population(const PopulationSpec& spec, std::uint64_t seed) {
  spec.validate();
  Population pop;
  for (std::size_t m = 0; m < spec.strata.size(); ++m) {
    pop.stratum_ids.push_back(spec.strata[m].id);
    pop.values.push_back(generate_stratum(spec.strata[m], seed, m));
  }
  return pop;
}

SurveySample draw_stratified_sample(const Population& pop, const PopulationSpec& spec,
                                    std::uint64_t seed) {
  if (pop.values.size() != spec.strata.size()) throw ValidationError("population and spec disagree on strata");
  SurveySample out;
  out.population_size = spec.total_size;
  out.space = spec.is_count() ? ObservationSpace::Count : ObservationSpace::Continuous;
  out.population = spec;
  for (std::size_t m = 0; m < spec.strata.size(); ++m) {
    sample_stratum(pop.values[m], spec.strata[m], seed, m, out);
  }
  return out;
}

SurveySample simulate_survey(const PopulationSpec& spec, std::uint64_t seed) {
  spec.validate();
  SurveySample out;
  out.population_size = spec.total_size;
  out.space = spec.is_count() ? ObservationSpace::Count : ObservationSpace::Continuous;
  out.population = spec;
  for (std::size_t m = 0; m < spec.strata.size(); ++m) {
    sample_stratum(generate_stratum(spec.strata[m], seed, m), spec.strata[m], seed, m, out);
  }
  return out;
}

double effective_c(const SurveySample& sample) {
  if (sample.population_size <= 0) throw ValidationError("population_size must be positive");
  const double total = std::accumulate(sample.weights.begin(), sample.weights.end(), 0.0);
  return total / static_cast<double>(sample.population_size);
}

std::vector<double> normalize_weights(std::span<const double> weights) {
  if (weights.empty()) throw ValidationError("cannot normalize an empty weight vector");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("weights must be positive and finite");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= total;
  return out;
}

std::vector<double> normalize_weights(const SurveySample& sample) { return normalize_weights(sample.weights); }

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  return std::filesystem::path(csv_path.string() + ".json");
}

void save_sample(const std::filesystem::path& path, const SurveySample& sample) {
  sample.validate();
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "y,stratum,weight\n";
    for (std::size_t i = 0; i < sample.size(); ++i) {
      out << format_double(sample.records[i].value) << ',' << sample.records[i].stratum_id << ','
          << format_double(sample.weights[i]) << '\n';
    }
  }
  nlohmann::json meta;
  meta["population_size"] = sample.population_size;
  meta["observation_space"] = sample.space == ObservationSpace::Count ? "count" : "continuous";
  if (sample.population) meta["population"] = to_json(*sample.population);
  std::ofstream side(sidecar_path(path));
  if (!side) throw std::runtime_error("cannot write " + sidecar_path(path).string());
  side << meta.dump(2) << '\n';
}

namespace {

template <class T>
T parse_field(std::string_view field, const std::string& path, std::size_t line, const char* name) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw ParseError(path, line, std::string("cannot parse ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

SurveySample load_sample(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + name);
  SurveySample sample;

  const auto side = sidecar_path(path);
  std::ifstream side_in(side);
  if (!side_in) throw ValidationError("missing sidecar " + side.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(side_in);
    sample.population_size = meta.at("population_size").get<std::int64_t>();
    const auto space = meta.at("observation_space").get<std::string>();
    if (space == "count") {
      sample.space = ObservationSpace::Count;
    } else if (space == "continuous") {
      sample.space = ObservationSpace::Continuous;
    } else {
      throw ValidationError("unknown observation_space '" + space + "'");
    }
    if (meta.contains("population")) sample.population = population_spec_from_json(meta["population"]);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(side.string() + ": " + e.what());
  }

  std::string text;
  std::size_t line_no = 0;
  if (!std::getline(in, text)) throw ParseError(name, 1, "empty file");
  ++line_no;
  if (!text.empty() && text.back() == '\r') text.pop_back();
  if (text != "y,stratum,weight") throw ParseError(name, line_no, "expected header 'y,stratum,weight'");
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    std::string_view sv(text);
    const auto c1 = sv.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : sv.find(',', c1 + 1);
    if (c2 == std::string_view::npos || sv.find(',', c2 + 1) != std::string_view::npos) {
      throw ParseError(name, line_no, "expected 3 comma-separated fields");
    }
    const auto y = parse_field<double>(sv.substr(0, c1), name, line_no, "y");
    const auto stratum = parse_field<int>(sv.substr(c1 + 1, c2 - c1 - 1), name, line_no, "stratum");
    const auto w = parse_field<double>(sv.substr(c2 + 1), name, line_no, "weight");
    if (!(w > 0.0)) throw ParseError(name, line_no, "weight must be positive");
    sample.records.push_back({y, stratum});
    sample.weights.push_back(w);
  }
  if (sample.records.empty()) throw ParseError(name, line_no, "no records");
  sample.validate();
  return sample;
}

nlohmann::json to_json(const DensitySpec& density) {
  nlohmann::json j;
  std::visit(Overloaded{[&](const NormalMixture& m) {
                          j["family"] = "normal";
                          for (const auto& c : m.components) {
                            j["components"].push_back({{"weight", c.weight}, {"mean", c.mean}, {"sd", c.sd}});
                          }
                        },
                        [&](const PoissonMixture& m) {
                          j["family"] = "poisson";
                          for (const auto& c : m.components) {
                            j["components"].push_back({{"weight", c.weight}, {"rate", c.rate}});
                          }
                        }},
             density.variant);
  return j;
}

nlohmann::json to_json(const PopulationSpec& spec) {
  nlohmann::json j;
  j["total_size"] = spec.total_size;
  j["strata"] = nlohmann::json::array();
  for (const auto& s : spec.strata) {
    j["strata"].push_back({{"id", s.id},
                           {"population_size", s.population_size},
                           {"sample_size", s.sample_size},
                           {"density", to_json(s.density)}});
  }
  return j;
}

DensitySpec density_spec_from_json(const nlohmann::json& j) {
  const auto family = j.at("family").get<std::string>();
  DensitySpec d;
  if (family == "normal") {
    NormalMixture m;
    for (const auto& c : j.at("components")) {
      m.components.push_back({c.at("weight").get<double>(), c.at("mean").get<double>(), c.at("sd").get<double>()});
    }
    d.variant = std::move(m);
  } else if (family == "poisson") {
    PoissonMixture m;
    for (const auto& c : j.at("components")) {
      m.components.push_back({c.at("weight").get<double>(), c.at("rate").get<double>()});
    }
    d.variant = std::move(m);
  } else {
    throw ValidationError("unknown density family '" + family + "'");
  }
  return d;
}

PopulationSpec population_spec_from_json(const nlohmann::json& j) {
  std::vector<StratumSpec> strata;
  for (const auto& s : j.at("strata")) {
    strata.push_back({s.at("id").get<int>(), s.at("population_size").get<std::int64_t>(),
                      s.at("sample_size").get<std::int64_t>(), density_spec_from_json(s.at("density"))});
  }
  auto spec = PopulationSpec::from_strata(std::move(strata));
  if (j.contains("total_size")) spec.total_size = j["total_size"].get<std::int64_t>();
  spec.validate();
  return spec;
}

}  // namespace surveymix
