#include "fairlab/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace fairlab::dataio {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  size_t b = s.find_last_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool missing(const std::string& v) { return v.empty() || v == "?"; }

}  // namespace

const ColumnRule* SchemaSpec::find(const std::string& name) const {
  for (const auto& r : rules)
    if (r.name == name) return &r;
  return nullptr;
}

SchemaSpec SchemaSpec::parse(const std::string& text) {
  SchemaSpec schema;
  std::istringstream in(text);
  std::string line;
  int labels = 0, sensitives = 0;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string role, name;
    ls >> role >> name;
    if (name.empty()) throw SchemaError("schema: rule without a column name: " + line);
    ColumnRule rule;
    rule.name = name;
    std::string tok;
    if (role == "feature") {
      std::string kind;
      ls >> kind;
      if (kind == "numeric")
        rule.role = ColumnRule::Role::numeric;
      else if (kind == "categorical")
        rule.role = ColumnRule::Role::categorical;
      else
        throw SchemaError("schema: feature kind must be numeric or categorical: " + line);
      while (ls >> tok) {
        if (tok == "raw")
          rule.standardize = false;
        else
          throw SchemaError("schema: unknown feature option " + tok);
      }
    } else if (role == "label") {
      rule.role = ColumnRule::Role::label;
      ++labels;
      while (ls >> tok) {
        if (tok.rfind("positive=", 0) == 0)
          rule.positive_token = tok.substr(9);
        else
          throw SchemaError("schema: unknown label option " + tok);
      }
      if (rule.positive_token.empty())
        throw SchemaError("schema: label rule requires positive=<token>");
    } else if (role == "sensitive") {
      rule.role = ColumnRule::Role::sensitive;
      ++sensitives;
      while (ls >> tok) {
        if (tok.rfind("order=", 0) == 0)
          rule.order = split_on(tok.substr(6), ',');
        else if (tok.rfind("merge=", 0) == 0)
          rule.merge_with = tok.substr(6);
        else if (tok.rfind("order2=", 0) == 0)
          rule.merge_order = split_on(tok.substr(7), ',');
        else
          throw SchemaError("schema: unknown sensitive option " + tok);
      }
    } else if (role == "drop") {
      rule.role = ColumnRule::Role::drop;
    } else {
      throw SchemaError("schema: unknown role " + role);
    }
    schema.rules.push_back(std::move(rule));
  }
  if (labels != 1) throw SchemaError("schema: exactly one label rule required");
  if (sensitives != 1) throw SchemaError("schema: exactly one sensitive rule required");
  return schema;
}

SchemaSpec SchemaSpec::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("schema: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

LoadedData load_csv(const std::string& path, const SchemaSpec& schema, bool standardize) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("load_csv: empty file " + path);
  const std::vector<std::string> header = split_csv_line(line);

  std::vector<int> col_of(schema.rules.size(), -1);
  for (size_t r = 0; r < schema.rules.size(); ++r) {
    for (size_t c = 0; c < header.size(); ++c)
      if (trim(header[c]) == schema.rules[r].name) col_of[r] = static_cast<int>(c);
    if (col_of[r] < 0)
      throw SchemaError("load_csv: column '" + schema.rules[r].name + "' not in file");
  }
  const ColumnRule* sensitive_rule = nullptr;
  for (const auto& r : schema.rules)
    if (r.role == ColumnRule::Role::sensitive) sensitive_rule = &r;
  for (const auto& h : header) {
    const std::string name = trim(h);
    if (schema.find(name)) continue;
    if (sensitive_rule && name == sensitive_rule->merge_with) continue;
    throw SchemaError("load_csv: column '" + name + "' has no schema rule");
  }
  int merge_col = -1;
  if (sensitive_rule && !sensitive_rule->merge_with.empty()) {
    for (size_t c = 0; c < header.size(); ++c)
      if (trim(header[c]) == sensitive_rule->merge_with) merge_col = static_cast<int>(c);
    if (merge_col < 0)
      throw SchemaError("load_csv: merge column '" + sensitive_rule->merge_with +
                        "' not in file");
  }

  // First pass: keep complete rows as raw string fields.
  std::vector<std::vector<std::string>> rows;
  long dropped = 0;
  long row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("load_csv: row has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(header.size()),
                       row_no);
    bool drop_row = false;
    for (size_t r = 0; r < schema.rules.size(); ++r) {
      if (schema.rules[r].role == ColumnRule::Role::drop) continue;
      if (missing(trim(fields[col_of[r]]))) drop_row = true;
    }
    if (merge_col >= 0 && missing(trim(fields[merge_col]))) drop_row = true;
    if (drop_row) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw InvalidInput("load_csv: no usable rows in " + path);
  const long n = static_cast<long>(rows.size());

  // Category discovery for categorical features and the sensitive column(s).
  auto categories_of = [&](int col, const std::vector<std::string>& fixed) {
    if (!fixed.empty()) return fixed;
    std::vector<std::string> cats;
    for (const auto& row : rows) {
      const std::string v = trim(row[col]);
      if (std::find(cats.begin(), cats.end(), v) == cats.end()) cats.push_back(v);
    }
    std::sort(cats.begin(), cats.end());
    return cats;
  };

  LoadedData out;
  out.rows_dropped = dropped;
  std::vector<Vec> columns;        // feature columns
  std::vector<int> labels(n), sensitive(n);

  for (size_t r = 0; r < schema.rules.size(); ++r) {
    const ColumnRule& rule = schema.rules[r];
    const int col = col_of[r];
    switch (rule.role) {
      case ColumnRule::Role::numeric: {
        Vec v(n);
        for (long i = 0; i < n; ++i) {
          const std::string field = trim(rows[i][col]);
          char* end = nullptr;
          v[i] = std::strtod(field.c_str(), &end);
          if (end == field.c_str() || *end != '\0')
            throw ParseError("load_csv: column '" + rule.name + "' value '" + field +
                                 "' is not numeric",
                             i + 2);
        }
        columns.push_back(std::move(v));
        out.feature_names.push_back(rule.name);
        out.standardize_mask.push_back(rule.standardize);
        break;
      }
      case ColumnRule::Role::categorical: {
        const auto cats = categories_of(col, {});
        for (const auto& cat : cats) {
          Vec v(n, 0.0);
          for (long i = 0; i < n; ++i)
            if (trim(rows[i][col]) == cat) v[i] = 1.0;
          columns.push_back(std::move(v));
          out.feature_names.push_back(rule.name + "=" + cat);
          out.standardize_mask.push_back(false);
        }
        break;
      }
      case ColumnRule::Role::label: {
        for (long i = 0; i < n; ++i)
          labels[i] = trim(rows[i][col]) == rule.positive_token ? 1 : 0;
        break;
      }
      case ColumnRule::Role::sensitive: {
        const auto cats = categories_of(col, rule.order);
        auto index_of = [](const std::vector<std::string>& cats, const std::string& v,
                           const std::string& name, long row) {
          const auto it = std::find(cats.begin(), cats.end(), v);
          if (it == cats.end())
            throw ParseError("load_csv: sensitive column '" + name +
                                 "' has unlisted category '" + v + "'",
                             row);
          return static_cast<int>(it - cats.begin());
        };
        if (merge_col < 0) {
          for (long i = 0; i < n; ++i)
            sensitive[i] = index_of(cats, trim(rows[i][col]), rule.name, i + 2);
        } else {
          const auto cats2 = categories_of(merge_col, rule.merge_order);
          for (long i = 0; i < n; ++i) {
            const int a = index_of(cats, trim(rows[i][col]), rule.name, i + 2);
            const int b =
                index_of(cats2, trim(rows[i][merge_col]), rule.merge_with, i + 2);
            sensitive[i] = a * static_cast<int>(cats2.size()) + b;
          }
        }
        break;
      }
      case ColumnRule::Role::drop:
        break;
    }
  }

  if (standardize) {
    for (size_t c = 0; c < columns.size(); ++c) {
      if (!out.standardize_mask[c]) continue;
      Vec& v = columns[c];
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= n;
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      var /= n;
      // Already-standardized columns pass through so that reloading a
      // serialized dataset is bit-exact.
      if (std::abs(mean) < 1e-9 && std::abs(var - 1.0) < 1e-9) continue;
      const double sd = std::sqrt(var);
      if (sd <= 0.0)
        throw InvalidInput("load_csv: constant numeric column '" +
                           out.feature_names[c] + "'");
      for (double& x : v) x = (x - mean) / sd;
    }
  }

  Mat features(static_cast<int>(n), static_cast<int>(columns.size()));
  for (long i = 0; i < n; ++i)
    for (size_t c = 0; c < columns.size(); ++c)
      features.at(static_cast<int>(i), static_cast<int>(c)) = columns[c][i];
  out.data = Dataset::make(std::move(features), std::move(labels), std::move(sensitive));
  return out;
}

std::pair<Dataset, Dataset> standardize_pair(const Dataset& train, const Dataset& test,
                                             const std::vector<bool>& mask) {
  if (static_cast<int>(mask.size()) != train.dim() || train.dim() != test.dim())
    throw InvalidInput("standardize_pair: mask/feature dimension mismatch");
  Mat ftrain = train.features;
  Mat ftest = test.features;
  for (int c = 0; c < train.dim(); ++c) {
    if (!mask[c]) continue;
    double mean = 0.0;
    for (int i = 0; i < train.n(); ++i) mean += ftrain.at(i, c);
    mean /= train.n();
    double var = 0.0;
    for (int i = 0; i < train.n(); ++i) {
      const double d = ftrain.at(i, c) - mean;
      var += d * d;
    }
    var /= train.n();
    if (std::abs(mean) < 1e-9 && std::abs(var - 1.0) < 1e-9) continue;
    const double sd = std::sqrt(var);
    if (sd <= 0.0) throw InvalidInput("standardize_pair: constant train column");
    for (int i = 0; i < train.n(); ++i) ftrain.at(i, c) = (ftrain.at(i, c) - mean) / sd;
    for (int i = 0; i < test.n(); ++i) ftest.at(i, c) = (ftest.at(i, c) - mean) / sd;
  }
  return {Dataset::make(std::move(ftrain), train.labels, train.sensitive),
          Dataset::make(std::move(ftest), test.labels, test.sensitive)};
}

namespace {

Dataset take_rows(const Dataset& source, const std::vector<int>& rows) {
  Mat f(static_cast<int>(rows.size()), source.dim());
  std::vector<int> labels, sens;
  labels.reserve(rows.size());
  sens.reserve(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < source.dim(); ++c)
      f.at(static_cast<int>(r), c) = source.features.at(rows[r], c);
    labels.push_back(source.labels[rows[r]]);
    sens.push_back(source.sensitive[rows[r]]);
  }
  return Dataset::make(std::move(f), std::move(labels), std::move(sens));
}

// Per-group allocation of `total` samples: group 0 gets `ratio`, the rest is
// split over the other groups in proportion to source counts (largest
// remainder rounding).
std::vector<int> allocate_counts(const Dataset& source, double ratio, int total) {
  const int k = source.groups();
  Vec want(k);
  want[0] = ratio * total;
  double rest_total = 0.0;
  for (int s = 1; s < k; ++s) rest_total += source.group_counts[s];
  for (int s = 1; s < k; ++s)
    want[s] = (1.0 - ratio) * total * source.group_counts[s] / rest_total;
  std::vector<int> counts(k);
  int assigned = 0;
  std::vector<std::pair<double, int>> rema;
  for (int s = 0; s < k; ++s) {
    counts[s] = static_cast<int>(std::floor(want[s]));
    assigned += counts[s];
    rema.push_back({want[s] - counts[s], s});
  }
  std::sort(rema.begin(), rema.end(), std::greater<>());
  for (int i = 0; i < total - assigned; ++i) counts[rema[i % k].second]++;
  return counts;
}

}  // namespace

std::pair<Dataset, Dataset> imbalance_subsample(const Dataset& source, double target_ratio,
                                                int n_train, int n_test, uint64_t seed) {
  if (target_ratio <= 0.0 || target_ratio >= 1.0)
    throw InvalidInput("imbalance_subsample: ratio must lie in (0,1)");
  if (n_train < 1 || n_test < 0) throw InvalidInput("imbalance_subsample: bad sizes");
  const int k = source.groups();
  const auto train_counts = allocate_counts(source, target_ratio, n_train);
  const auto test_counts = allocate_counts(source, target_ratio, n_test);
  std::vector<std::vector<int>> pools(k);
  for (int i = 0; i < source.n(); ++i) pools[source.sensitive[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<int> train_rows, test_rows;
  for (int s = 0; s < k; ++s) {
    if (train_counts[s] + test_counts[s] > static_cast<int>(pools[s].size()))
      throw InsufficientData("imbalance_subsample: group " + std::to_string(s) +
                             " has only " + std::to_string(pools[s].size()) + " samples");
    std::shuffle(pools[s].begin(), pools[s].end(), rng);
    for (int i = 0; i < train_counts[s]; ++i) train_rows.push_back(pools[s][i]);
    for (int i = 0; i < test_counts[s]; ++i)
      test_rows.push_back(pools[s][train_counts[s] + i]);
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {take_rows(source, train_rows), take_rows(source, test_rows)};
}

void write_csv(const Dataset& data, const std::string& path,
               const std::vector<std::string>& feature_names) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("write_csv: cannot open " + path);
  for (int c = 0; c < data.dim(); ++c) {
    if (c) out << ',';
    if (static_cast<int>(feature_names.size()) == data.dim())
      out << feature_names[c];
    else
      out << "f" << c;
  }
  out << ",label,sensitive\n";
  char buf[64];
  for (int i = 0; i < data.n(); ++i) {
    for (int c = 0; c < data.dim(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.features.at(i, c));
      if (c) out << ',';
      out << buf;
    }
    out << ',' << data.labels[i] << ',' << data.sensitive[i] << '\n';
  }
  if (!out) throw InvalidInput("write_csv: write failed for " + path);
}

SchemaSpec matching_schema(const Dataset& data,
                           const std::vector<std::string>& feature_names) {
  SchemaSpec schema;
  for (int c = 0; c < data.dim(); ++c) {
    ColumnRule r;
    r.role = ColumnRule::Role::numeric;
    r.name = static_cast<int>(feature_names.size()) == data.dim() ? feature_names[c]
                                                                  : "f" + std::to_string(c);
    r.standardize = false;
    schema.rules.push_back(std::move(r));
  }
  ColumnRule label;
  label.role = ColumnRule::Role::label;
  label.name = "label";
  label.positive_token = "1";
  schema.rules.push_back(label);
  ColumnRule sens;
  sens.role = ColumnRule::Role::sensitive;
  sens.name = "sensitive";
  for (int s = 0; s < data.groups(); ++s) sens.order.push_back(std::to_string(s));
  schema.rules.push_back(sens);
  return schema;
}

std::string schema_text(const SchemaSpec& schema) {
  std::ostringstream out;
  for (const auto& r : schema.rules) {
    switch (r.role) {
      case ColumnRule::Role::numeric:
        out << "feature " << r.name << " numeric" << (r.standardize ? "" : " raw") << "\n";
        break;
      case ColumnRule::Role::categorical:
        out << "feature " << r.name << " categorical\n";
        break;
      case ColumnRule::Role::label:
        out << "label " << r.name << " positive=" << r.positive_token << "\n";
        break;
      case ColumnRule::Role::sensitive: {
        out << "sensitive " << r.name;
        if (!r.order.empty()) {
          out << " order=";
          for (size_t i = 0; i < r.order.size(); ++i)
            out << (i ? "," : "") << r.order[i];
        }
        if (!r.merge_with.empty()) {
          out << " merge=" << r.merge_with;
          if (!r.merge_order.empty()) {
            out << " order2=";
            for (size_t i = 0; i < r.merge_order.size(); ++i)
              out << (i ? "," : "") << r.merge_order[i];
          }
        }
        out << "\n";
        break;
      }
      case ColumnRule::Role::drop:
        out << "drop " << r.name << "\n";
        break;
    }
  }
  return out.str();
}

Dataset gen_trainable_tabular(const TabularGenParams& params, uint64_t seed) {
  if (params.n < 2 || params.d < 1) throw InvalidParams("gen_trainable_tabular: bad sizes");
  const int k = static_cast<int>(params.p_s.size());
  if (k < 2 || params.pos_rate.size() != params.p_s.size())
    throw InvalidParams("gen_trainable_tabular: p_s and pos_rate must agree, k >= 2");
  if (params.label_dims + params.group_dims > params.d)
    throw InvalidParams("gen_trainable_tabular: more structured dims than d");
  double sum = 0.0;
  for (double p : params.p_s) {
    if (p <= 0.0) throw InvalidParams("gen_trainable_tabular: p_s entries must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidParams("gen_trainable_tabular: p_s must sum to 1");
  for (double r : params.pos_rate)
    if (r <= 0.0 || r >= 1.0)
      throw InvalidParams("gen_trainable_tabular: pos_rate entries in (0,1)");
  if (!params.label_sep_scale.empty() &&
      params.label_sep_scale.size() != params.p_s.size())
    throw InvalidParams("gen_trainable_tabular: label_sep_scale length mismatch");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  Mat f(params.n, params.d);
  std::vector<int> labels(params.n), sens(params.n);
  const double a = params.label_sep / std::sqrt(static_cast<double>(params.label_dims));
  const double b = params.group_sep / std::sqrt(std::max(1, params.group_dims));
  for (int i = 0; i < params.n; ++i) {
    double r = unit(rng);
    int s = k - 1;
    for (int c = 0; c < k; ++c) {
      if (r < params.p_s[c]) {
        s = c;
        break;
      }
      r -= params.p_s[c];
    }
    const int y = unit(rng) < params.pos_rate[s] ? 1 : 0;
    sens[i] = s;
    labels[i] = y;
    const double sep_scale =
        params.label_sep_scale.empty() ? 1.0 : params.label_sep_scale[s];
    const double group_pos = k > 1 ? 2.0 * s / (k - 1) - 1.0 : 0.0;
    for (int c = 0; c < params.d; ++c) {
      double mean = 0.0;
      if (c < params.label_dims)
        mean = a * sep_scale * (2.0 * y - 1.0);
      else if (c < params.label_dims + params.group_dims)
        mean = b * group_pos;
      f.at(i, c) = mean + noise(rng);
    }
  }
  return Dataset::make(std::move(f), std::move(labels), std::move(sens));
}

TabularGenParams compas_like_params(int n) {
  TabularGenParams p;
  p.n = n;
  p.d = 12;
  p.p_s = {0.8, 0.2};
  p.pos_rate = {0.55, 0.28};
  p.label_sep = 0.9;
  p.label_sep_scale = {1.0, 0.8};
  p.group_sep = 1.6;
  p.label_dims = 5;
  p.group_dims = 3;
  return p;
}

TabularGenParams adult_like_params(int n) {
  TabularGenParams p;
  p.n = n;
  p.d = 16;
  p.p_s = {0.62, 0.38};
  p.pos_rate = {0.31, 0.11};
  p.label_sep = 0.95;
  p.group_sep = 1.5;
  p.label_dims = 6;
  p.group_dims = 3;
  return p;
}

DiscreteJoint gen_discrete_joint(const oracle::JointSpec& spec, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return oracle::random_joint(spec, rng);
}

oracle::Remark1Instance gen_remark1(int nx, int ny, int ns, uint64_t seed, double eta) {
  return oracle::make_remark1_joint(nx, ny, ns, seed, eta);
}

}  // namespace fairlab::dataio
