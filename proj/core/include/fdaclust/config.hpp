#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdaclust/cluster.hpp"
#include "fdaclust/synth.hpp"

namespace fdaclust {

/// Minimal TOML reader covering what the config format uses: [section]
/// headers, key = value pairs, # comments, and values that are quoted
/// strings, booleans, numbers, or flat numeric arrays. Keys are exposed
/// flattened as "section.key".
class TomlTable {
 public:
  static TomlTable parse(const std::string& text);

  bool has(const std::string& key) const;
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key) const;
  double get_number(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_array(const std::string& key) const;
  std::vector<int> get_int_array(const std::string& key) const;

 private:
  struct Value {
    enum class Kind { string, number, boolean, array };
    Kind kind = Kind::number;
    std::string str;
    double number = 0.0;
    bool boolean = false;
    std::vector<double> array;
    int line = 0;
  };

  const Value& at(const std::string& key) const;

  std::map<std::string, Value> entries_;
};

/// Every pipeline knob in one place. Defaults mirror the reference analysis:
/// smiling symmetry indicator, order-4 basis with 9 interior knots, k = 4,
/// 95% explained variance.
struct PipelineConfig {
  std::string indicator = "symmetry";
  std::string exercise = "smiling";
  bool registration = true;
  int landmarks = 1;
  std::string route = "fpc-kmeans";
  int k = 4;
  double q_threshold = 0.95;
  std::uint64_t seed = 42;
  int grid_size = Cohort::kDefaultGridSize;
  std::string out_dir = "out";

  int order = 4;
  int interior_knots = 9;
  double smoothing_lambda = 0.0;

  double fuzzifier = 2.0;
  Linkage linkage = Linkage::ward;
  CovarianceModel covariance = CovarianceModel::bic_best;
  int restarts = 10;
  int max_iter = 200;
  std::optional<int> window;
  std::optional<int> q_override;

  CohortSpec synth = CohortSpec::default_spec();

  ClusterParams cluster_params() const;
  std::shared_ptr<const BSplineBasis> make_configured_basis() const;

  bool operator==(const PipelineConfig&) const = default;
};

PipelineConfig default_config();

/// The annotated config text written by the init command; parses back to
/// default_config().
std::string default_config_toml();

/// Parses TOML text over the defaults (absent keys keep their default) and
/// validates the result, rejecting unknown keys and contradictory settings
/// such as a DTW window on a non-DTW route.
PipelineConfig parse_config(const std::string& text);

}  // namespace fdaclust
