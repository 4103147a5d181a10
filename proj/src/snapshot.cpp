/*
 * Copyright 2026 The keen2act Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <keen2act/error.hpp>
#include <keen2act/snapshot.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace keen2act {

namespace {

constexpr std::string_view kMagic = "keen2act-model 1";

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void real(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    out_ << std::string_view(buf, res.ptr);
  }

  void reals(std::string_view label, std::span<const double> xs) {
    out_ << label << ' ' << xs.size();
    for (const double x : xs) {
      out_ << ' ';
      real(x);
    }
    out_ << '\n';
  }

  void ids(std::string_view label, const IdIndex& index) {
    out_ << label << ' ' << index.size() << '\n';
    for (const auto& raw : index.raw_ids()) {
      out_ << raw << '\n';
    }
  }

  void layout(std::string_view label, const FeatureLayout& l) {
    const auto& o = l.options();
    out_ << "layout " << label << ' ' << (l.has_activity_block() ? 1 : 0) << ' '
         << o.user_id << ' ' << o.item_id << ' ' << o.user_features << ' '
         << o.item_features << ' ' << l.num_users() << ' ' << l.num_items()
         << ' ' << l.num_activities() << ' ' << l.user_feature_dim() << ' '
         << l.item_feature_dim() << '\n';
  }

  void params(std::string_view label, const FMParameters& p) {
    out_ << "params " << label << ' ' << p.dim << ' ' << p.k << '\n';
    out_ << "w0 ";
    real(p.w0);
    out_ << '\n';
    reals("w", p.w);
    for (std::size_t i = 0; i < p.dim; ++i) {
      const auto row = p.factor_row(i);
      for (std::size_t f = 0; f < p.k; ++f) {
        if (f) {
          out_ << ' ';
        }
        real(row[f]);
      }
      out_ << '\n';
    }
  }

  std::ostream& out() { return out_; }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s)) {
      throw ParseError(line_no_ + 1, "unexpected end of model snapshot");
    }
    ++line_no_;
    if (!s.empty() && s.back() == '\r') {
      s.pop_back();
    }
    return s;
  }

  std::istringstream tokens(std::string_view expected_label) {
    std::istringstream ss(line());
    std::string label;
    ss >> label;
    if (label != expected_label) {
      fail("expected '" + std::string(expected_label) + "', got '" + label +
           "'");
    }
    return ss;
  }

  template <class T>
  T get(std::istringstream& ss) {
    std::string tok;
    if (!(ss >> tok)) {
      fail("missing value");
    }
    T out{};
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      fail("bad number '" + tok + "'");
    }
    return out;
  }

  std::vector<double> reals(std::string_view label) {
    auto ss = tokens(label);
    const auto n = get<std::size_t>(ss);
    std::vector<double> xs(n);
    for (auto& x : xs) {
      x = get<double>(ss);
    }
    return xs;
  }

  IdIndex ids(std::string_view label) {
    auto ss = tokens(label);
    const auto n = get<std::size_t>(ss);
    std::vector<std::string> raw;
    raw.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      raw.push_back(line());
    }
    return IdIndex(std::move(raw));
  }

  FeatureLayout layout(std::string_view label) {
    auto ss = tokens("layout");
    std::string name;
    ss >> name;
    if (name != label) {
      fail("expected layout " + std::string(label));
    }
    const bool with_activity = get<int>(ss) != 0;
    LayoutOptions o;
    o.user_id = get<int>(ss) != 0;
    o.item_id = get<int>(ss) != 0;
    o.user_features = get<int>(ss) != 0;
    o.item_features = get<int>(ss) != 0;
    const auto users = get<std::size_t>(ss);
    const auto items = get<std::size_t>(ss);
    const auto acts = get<std::size_t>(ss);
    const auto ud = get<std::size_t>(ss);
    const auto id = get<std::size_t>(ss);
    return with_activity ? FeatureLayout::act(users, items, acts, ud, id, o)
                         : FeatureLayout::keen(users, items, ud, id, o);
  }

  FMParameters params(std::string_view label) {
    auto ss = tokens("params");
    std::string name;
    ss >> name;
    if (name != label) {
      fail("expected params " + std::string(label));
    }
    FMParameters p;
    p.dim = get<std::size_t>(ss);
    p.k = get<std::size_t>(ss);
    auto w0 = tokens("w0");
    p.w0 = get<double>(w0);
    p.w = reals("w");
    if (p.w.size() != p.dim) {
      fail("linear weight count does not match dim");
    }
    p.factors.reserve(p.dim * p.k);
    for (std::size_t i = 0; i < p.dim; ++i) {
      std::istringstream ss_row(line());
      for (std::size_t f = 0; f < p.k; ++f) {
        p.factors.push_back(get<double>(ss_row));
      }
    }
    return p;
  }

  std::string block_until(std::string_view terminator) {
    std::string text;
    while (true) {
      auto s = line();
      if (s == terminator) {
        return text;
      }
      text += s;
      text += '\n';
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(line_no_, what);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace

void save_model(std::ostream& out, const Catalog& catalog,
                const TrainedModel& model) {
  Writer w(out);
  out << kMagic << '\n';
  w.ids("users", catalog.users);
  w.ids("items", catalog.items);
  w.ids("activities", catalog.activities);
  w.layout("keen", model.keen.layout);
  w.params("keen", model.keen.params);
  w.layout("act", model.act.layout);
  w.params("act", model.act.params);
  w.reals("item_thresholds", model.thresholds.item_thresholds);
  w.reals("activity_thresholds", model.thresholds.activity_thresholds);
  out << "fallback ";
  w.real(model.thresholds.global_item_fallback);
  out << '\n';
  out << "warm " << model.features.warm_items.size() << ' ';
  for (const auto b : model.features.warm_items) {
    out << (b ? '1' : '0');
  }
  out << '\n';
  out << "user_features\n";
  write_feature_matrix(out, model.features.users);
  out << "end_user_features\n";
  out << "item_features\n";
  write_feature_matrix(out, model.features.items);
  out << "end_item_features\n";
  out << "end\n";
}

void save_model(const std::filesystem::path& path, const Catalog& catalog,
                const TrainedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  save_model(out, catalog, model);
}

ModelSnapshot load_model(std::istream& in) {
  Reader r(in);
  if (r.line() != kMagic) {
    r.fail("not a keen2act model snapshot");
  }
  ModelSnapshot snap;
  snap.catalog.users = r.ids("users");
  snap.catalog.items = r.ids("items");
  snap.catalog.activities = r.ids("activities");
  auto& m = snap.model;
  m.keen.layout = r.layout("keen");
  m.keen.params = r.params("keen");
  m.act.layout = r.layout("act");
  m.act.params = r.params("act");
  if (m.keen.params.dim != m.keen.layout.dim() ||
      m.act.params.dim != m.act.layout.dim()) {
    r.fail("parameter dims do not match layouts");
  }
  m.thresholds.item_thresholds = r.reals("item_thresholds");
  m.thresholds.activity_thresholds = r.reals("activity_thresholds");
  auto fb = r.tokens("fallback");
  m.thresholds.global_item_fallback = r.get<double>(fb);
  {
    auto ss = r.tokens("warm");
    const auto n = r.get<std::size_t>(ss);
    std::string bits;
    ss >> bits;
    if (bits.size() != n) {
      r.fail("warm item bitmap length mismatch");
    }
    m.features.warm_items.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      m.features.warm_items[i] = bits[i] == '1' ? 1 : 0;
    }
  }
  r.tokens("user_features");
  {
    std::istringstream block(r.block_until("end_user_features"));
    m.features.users = read_feature_matrix(block, EntityKind::kUser);
  }
  r.tokens("item_features");
  {
    std::istringstream block(r.block_until("end_item_features"));
    m.features.items = read_feature_matrix(block, EntityKind::kItem);
  }
  r.tokens("end");
  if (snap.catalog.num_users() != m.num_users() ||
      snap.catalog.num_items() != m.num_items() ||
      snap.catalog.num_activities() != m.num_activities()) {
    r.fail("catalog sizes do not match model layouts");
  }
  return snap;
}

ModelSnapshot load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  return load_model(in);
}

}  // namespace keen2act
