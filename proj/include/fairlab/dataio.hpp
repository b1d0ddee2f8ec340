#ifndef FAIRLAB_DATAIO_HPP
#define FAIRLAB_DATAIO_HPP

#include <string>
#include <utility>
#include <vector>

#include "fairlab/core.hpp"
#include "fairlab/oracle.hpp"

namespace fairlab::dataio {

// Plain-text schema, one rule per line:
//   feature <column> numeric [raw]
//   feature <column> categorical
//   label <column> positive=<token>
//   sensitive <column> [order=<v0,v1,...>] [merge=<column2>] [order2=<v0,v1,...>]
//   drop <column>
// '#' starts a comment. Every CSV column must be covered by exactly one rule;
// exactly one label rule and one sensitive rule are required. `raw` disables
// standardization for that column. `merge` forms a k1*k2-ary sensitive
// attribute from two categorical columns.
struct ColumnRule {
  enum class Role { numeric, categorical, label, sensitive, drop };
  Role role = Role::numeric;
  std::string name;
  bool standardize = true;
  std::string positive_token;
  std::vector<std::string> order;
  std::string merge_with;
  std::vector<std::string> merge_order;
};

struct SchemaSpec {
  std::vector<ColumnRule> rules;

  static SchemaSpec parse(const std::string& text);
  static SchemaSpec load_file(const std::string& path);
  const ColumnRule* find(const std::string& name) const;
};

struct LoadedData {
  Dataset data;
  long rows_dropped = 0;
  std::vector<std::string> feature_names;
  std::vector<bool> standardize_mask;  // per feature column
};

// Parses a comma-separated file with a header row. Missing values ("" or "?")
// drop the row. Numeric columns are standardized to mean 0 / variance 1
// (population convention) over the loaded rows unless `standardize` is false
// or the column is already standardized within 1e-9; categoricals are one-hot
// expanded and never standardized.
LoadedData load_csv(const std::string& path, const SchemaSpec& schema,
                    bool standardize = true);

// Standardizes masked columns of both splits with statistics computed on the
// train split only.
std::pair<Dataset, Dataset> standardize_pair(const Dataset& train, const Dataset& test,
                                             const std::vector<bool>& mask);

// Disjoint train/test selection hitting the target group-0 fraction within
// one sample; the remaining mass is spread over the other groups in
// proportion to their source frequencies.
std::pair<Dataset, Dataset> imbalance_subsample(const Dataset& source, double target_ratio,
                                                int n_train, int n_test, uint64_t seed);

// Writes features (17 significant digits), label and sensitive columns with a
// header row. matching_schema() yields a schema that reloads the file
// bit-exactly (all features raw numeric).
void write_csv(const Dataset& data, const std::string& path,
               const std::vector<std::string>& feature_names = {});
SchemaSpec matching_schema(const Dataset& data,
                           const std::vector<std::string>& feature_names = {});
std::string schema_text(const SchemaSpec& schema);

// Parametric generative model with controllable sensitive-marginal imbalance
// and group-conditional label shift.
struct TabularGenParams {
  int n = 3250;
  int d = 12;
  Vec p_s = {0.8, 0.2};
  Vec pos_rate = {0.55, 0.26};  // P(Y=1 | S=s)
  double label_sep = 1.0;
  // Optional per-group multipliers on label_sep (feature informativeness can
  // differ across groups); empty means 1 for every group.
  Vec label_sep_scale = {};
  double group_sep = 1.5;
  int label_dims = 4;
  int group_dims = 2;
};

Dataset gen_trainable_tabular(const TabularGenParams& params, uint64_t seed);

// Benchmark-shaped presets: recidivism-style (12 features, 80/20 race split,
// strong group-conditional label shift) and income-style (binary-expanded
// census shape, 80/20 gender split). Trend targets only; no external files.
TabularGenParams compas_like_params(int n = 6500);
TabularGenParams adult_like_params(int n = 25000);

// Discrete-world generators shared with the oracle module.
DiscreteJoint gen_discrete_joint(const oracle::JointSpec& spec, uint64_t seed);
oracle::Remark1Instance gen_remark1(int nx, int ny, int ns, uint64_t seed, double eta);

}  // namespace fairlab::dataio

#endif
