#include "diul/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <type_traits>

#include "diul/error.hpp"
#include "diul/rng.hpp"

namespace diul {

using nlohmann::json;

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.data.blob.n_categories = 4;
  c.data.blob.n_domains_total = 4;
  c.data.blob.cat_dims = 4;
  c.data.blob.dom_dims = 4;
  c.data.blob.noise_dims = 8;
  c.data.blob.alpha_cat = 1.0;
  c.data.blob.gamma_dom = 2.0;
  c.data.blob.sigma_x = 0.5;
  c.data.groups = {DataGroup{{0, 1, 2}, 741, 0.9}, DataGroup{{3}, 500, 0.0}};

  c.split.setting = Setting::kAllCorrelated;
  c.split.params.source_domains = {0, 1, 2};
  c.split.params.target_domains = {3};
  c.split.params.labeled_categories = {0, 1, 2, 3};
  c.split.params.label_fraction = 0.1;
  c.split.params.validation_fraction = 0.1;

  c.domain_classifier.epochs = 200;
  c.domain_classifier.lr = 0.5;

  c.pretrain = PretrainConfig{};
  c.probe = ProbeConfig{};
  c.seeds = {0, 1, 2, 3, 4};
  c.variants = {"random_init", "infonce", "diul"};
  return c;
}

namespace {

// Reads fields of one JSON object, remembering which keys were consumed so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw SchemaError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return doc_.contains(key);
  }

  const json& raw(const std::string& key) { return seen_.insert(key), doc_.at(key); }

  double number(const std::string& key, double def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_number()) throw SchemaError(at(key), "expected a number");
    return v.get<double>();
  }

  long long integer(const std::string& key, long long def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_number_integer()) throw SchemaError(at(key), "expected an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_boolean()) throw SchemaError(at(key), "expected a boolean");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_string()) throw SchemaError(at(key), "expected a string");
    return v.get<std::string>();
  }

  template <class T>
  std::vector<T> int_list(const std::string& key, std::vector<T> def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_array()) throw SchemaError(at(key), "expected an array of integers");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() || (std::is_unsigned_v<T> && v[i].get<long long>() < 0))
        throw SchemaError(at(key) + "[" + std::to_string(i) + "]", "expected a non-negative integer");
      out.push_back(v[i].get<T>());
    }
    return out;
  }

  std::vector<std::string> string_list(const std::string& key, std::vector<std::string> def) {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_array()) throw SchemaError(at(key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) throw SchemaError(at(key) + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, _] : doc_.items())
      if (!seen_.count(key)) throw SchemaError(at(key), "unknown field");
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw SchemaError(path, what);
}

int as_int(long long v, const std::string& path) {
  require(v >= -2147483647LL && v <= 2147483647LL, path, "integer out of range");
  return static_cast<int>(v);
}

void parse_data(Section& s, DataConfig& d) {
  BlobSpec& b = d.blob;
  b.n_categories = as_int(s.integer("n_categories", b.n_categories), s.at("n_categories"));
  b.n_domains_total = as_int(s.integer("n_domains_total", b.n_domains_total), s.at("n_domains_total"));
  b.cat_dims = as_int(s.integer("cat_dims", b.cat_dims), s.at("cat_dims"));
  b.dom_dims = as_int(s.integer("dom_dims", b.dom_dims), s.at("dom_dims"));
  b.noise_dims = as_int(s.integer("noise_dims", b.noise_dims), s.at("noise_dims"));
  b.alpha_cat = s.number("alpha_cat", b.alpha_cat);
  b.gamma_dom = s.number("gamma_dom", b.gamma_dom);
  b.sigma_x = s.number("sigma_x", b.sigma_x);
  require(b.n_categories >= 2, s.at("n_categories"), "must be >= 2");
  require(b.n_domains_total >= 2, s.at("n_domains_total"), "must be >= 2");
  require(b.cat_dims >= b.n_categories, s.at("cat_dims"), "must be >= n_categories");
  require(b.dom_dims >= b.n_domains_total, s.at("dom_dims"), "must be >= n_domains_total");
  require(b.noise_dims >= 0, s.at("noise_dims"), "must be >= 0");
  require(b.alpha_cat > 0.0, s.at("alpha_cat"), "must be > 0");
  require(b.gamma_dom > 0.0, s.at("gamma_dom"), "must be > 0");
  require(b.sigma_x >= 0.0, s.at("sigma_x"), "must be >= 0");

  if (s.has("groups")) {
    const json& groups = s.raw("groups");
    require(groups.is_array() && !groups.empty(), s.at("groups"), "expected a non-empty array");
    d.groups.clear();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      Section gs(groups[g], s.at("groups") + "[" + std::to_string(g) + "]");
      DataGroup grp;
      grp.domains = gs.int_list<int>("domains", {});
      grp.n_per_domain = as_int(gs.integer("n_per_domain", grp.n_per_domain), gs.at("n_per_domain"));
      grp.rho = gs.number("rho", grp.rho);
      gs.finish();
      require(!grp.domains.empty(), gs.at("domains"), "must list at least one domain");
      for (int dom : grp.domains)
        require(dom >= 0 && dom < b.n_domains_total, gs.at("domains"), "domain id outside [0, n_domains_total)");
      require(grp.n_per_domain >= 1, gs.at("n_per_domain"), "must be >= 1");
      require(grp.rho >= 0.0 && grp.rho <= 1.0, gs.at("rho"), "must lie in [0,1]");
      d.groups.push_back(std::move(grp));
    }
  }
  std::set<int> used;
  for (const auto& grp : d.groups)
    for (int dom : grp.domains) require(used.insert(dom).second, s.at("groups"), "a domain appears in two groups");
  s.finish();
}

void parse_split(Section& s, SplitConfig& c) {
  const std::string name = s.string("setting", to_string(c.setting));
  auto setting = parse_setting(name);
  require(setting.has_value(), s.at("setting"),
          "must be one of all_correlated, domain_correlated, category_correlated, uncorrelated");
  c.setting = *setting;
  SplitParams& p = c.params;
  p.source_domains = s.int_list<int>("source_domains", p.source_domains);
  p.unlabeled_domains = s.int_list<int>("unlabeled_domains", p.unlabeled_domains);
  p.target_domains = s.int_list<int>("target_domains", p.target_domains);
  p.labeled_categories = s.int_list<int>("labeled_categories", p.labeled_categories);
  p.unlabeled_categories = s.int_list<int>("unlabeled_categories", p.unlabeled_categories);
  p.label_fraction = s.number("label_fraction", p.label_fraction);
  p.validation_fraction = s.number("validation_fraction", p.validation_fraction);
  require(!p.source_domains.empty(), s.at("source_domains"), "must not be empty");
  require(!p.target_domains.empty(), s.at("target_domains"), "must not be empty");
  require(!p.labeled_categories.empty(), s.at("labeled_categories"), "must not be empty");
  require(p.label_fraction > 0.0 && p.label_fraction <= 1.0, s.at("label_fraction"), "must lie in (0,1]");
  require(p.validation_fraction >= 0.0 && p.validation_fraction < 1.0, s.at("validation_fraction"),
          "must lie in [0,1)");
  s.finish();
}

void parse_pretrain(Section& s, PretrainConfig& c) {
  c.epochs = as_int(s.integer("epochs", c.epochs), s.at("epochs"));
  c.batch_size = as_int(s.integer("batch_size", c.batch_size), s.at("batch_size"));
  c.lr = s.number("lr", c.lr);
  c.weight_decay = s.number("weight_decay", c.weight_decay);
  c.momentum = s.number("momentum", c.momentum);
  c.temperature = s.number("temperature", c.temperature);
  c.bank_size = as_int(s.integer("bank_size", c.bank_size), s.at("bank_size"));
  c.bank_lr = s.number("bank_lr", c.bank_lr);
  c.cosine_schedule = s.boolean("cosine_schedule", c.cosine_schedule);
  c.hidden = s.int_list<std::size_t>("hidden", c.hidden);
  c.feature_dim = static_cast<std::size_t>(s.integer("feature_dim", static_cast<long long>(c.feature_dim)));
  c.debug_checks = s.boolean("debug_checks", c.debug_checks);
  if (s.has("augment")) {
    Section a(s.raw("augment"), s.at("augment"));
    c.augment.noise_std = a.number("noise_std", c.augment.noise_std);
    c.augment.scale_jitter = a.number("scale_jitter", c.augment.scale_jitter);
    c.augment.mask_fraction = a.number("mask_fraction", c.augment.mask_fraction);
    a.finish();
    require(c.augment.noise_std >= 0.0, a.at("noise_std"), "must be >= 0");
    require(c.augment.scale_jitter >= 0.0 && c.augment.scale_jitter < 1.0, a.at("scale_jitter"), "must lie in [0,1)");
    require(c.augment.mask_fraction >= 0.0 && c.augment.mask_fraction <= 1.0, a.at("mask_fraction"),
            "must lie in [0,1]");
  }
  require(c.epochs >= 0, s.at("epochs"), "must be >= 0");
  require(c.batch_size >= 1, s.at("batch_size"), "must be >= 1");
  require(c.lr >= 0.0, s.at("lr"), "must be >= 0");
  require(c.weight_decay >= 0.0, s.at("weight_decay"), "must be >= 0");
  require(c.momentum >= 0.0 && c.momentum <= 1.0, s.at("momentum"), "must lie in [0,1]");
  require(c.temperature > 0.0, s.at("temperature"), "must be > 0");
  require(c.bank_size >= 0, s.at("bank_size"), "must be >= 0");
  require(c.bank_lr >= 0.0, s.at("bank_lr"), "must be >= 0");
  require(c.feature_dim >= 1, s.at("feature_dim"), "must be >= 1");
  for (std::size_t h : c.hidden) require(h >= 1, s.at("hidden"), "layer sizes must be >= 1");
  s.finish();
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c = default_experiment_config();
  Section root(doc, "");
  if (root.has("data")) {
    Section s(root.raw("data"), "data");
    parse_data(s, c.data);
  }
  if (root.has("split")) {
    Section s(root.raw("split"), "split");
    parse_split(s, c.split);
  }
  if (root.has("domain_classifier")) {
    Section s(root.raw("domain_classifier"), "domain_classifier");
    c.domain_classifier.epochs = as_int(s.integer("epochs", c.domain_classifier.epochs), s.at("epochs"));
    c.domain_classifier.lr = s.number("lr", c.domain_classifier.lr);
    require(c.domain_classifier.epochs >= 0, s.at("epochs"), "must be >= 0");
    require(c.domain_classifier.lr >= 0.0, s.at("lr"), "must be >= 0");
    s.finish();
  }
  if (root.has("pretrain")) {
    Section s(root.raw("pretrain"), "pretrain");
    parse_pretrain(s, c.pretrain);
  }
  if (root.has("probe")) {
    Section s(root.raw("probe"), "probe");
    c.probe.epochs = as_int(s.integer("epochs", c.probe.epochs), s.at("epochs"));
    c.probe.lr = s.number("lr", c.probe.lr);
    c.probe.weight_decay = s.number("weight_decay", c.probe.weight_decay);
    require(c.probe.epochs >= 0, s.at("epochs"), "must be >= 0");
    require(c.probe.lr >= 0.0, s.at("lr"), "must be >= 0");
    require(c.probe.weight_decay >= 0.0, s.at("weight_decay"), "must be >= 0");
    s.finish();
  }
  c.seeds = root.int_list<std::uint64_t>("seeds", c.seeds);
  require(!c.seeds.empty(), "seeds", "must list at least one seed");
  c.variants = root.string_list("variants", c.variants);
  require(!c.variants.empty(), "variants", "must list at least one variant");
  for (std::size_t i = 0; i < c.variants.size(); ++i)
    require(c.variants[i] == "random_init" || parse_variant(c.variants[i]).has_value(),
            "variants[" + std::to_string(i) + "]", "must be random_init, infonce or diul");
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json config_to_json(const ExperimentConfig& c) {
  json groups = json::array();
  for (const auto& g : c.data.groups)
    groups.push_back({{"domains", g.domains}, {"n_per_domain", g.n_per_domain}, {"rho", g.rho}});
  const BlobSpec& b = c.data.blob;
  const SplitParams& p = c.split.params;
  const PretrainConfig& t = c.pretrain;
  return json{
      {"data",
       {{"n_categories", b.n_categories},
        {"n_domains_total", b.n_domains_total},
        {"cat_dims", b.cat_dims},
        {"dom_dims", b.dom_dims},
        {"noise_dims", b.noise_dims},
        {"alpha_cat", b.alpha_cat},
        {"gamma_dom", b.gamma_dom},
        {"sigma_x", b.sigma_x},
        {"groups", groups}}},
      {"split",
       {{"setting", to_string(c.split.setting)},
        {"source_domains", p.source_domains},
        {"unlabeled_domains", p.unlabeled_domains},
        {"target_domains", p.target_domains},
        {"labeled_categories", p.labeled_categories},
        {"unlabeled_categories", p.unlabeled_categories},
        {"label_fraction", p.label_fraction},
        {"validation_fraction", p.validation_fraction}}},
      {"domain_classifier", {{"epochs", c.domain_classifier.epochs}, {"lr", c.domain_classifier.lr}}},
      {"pretrain",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"lr", t.lr},
        {"weight_decay", t.weight_decay},
        {"momentum", t.momentum},
        {"temperature", t.temperature},
        {"bank_size", t.bank_size},
        {"bank_lr", t.bank_lr},
        {"cosine_schedule", t.cosine_schedule},
        {"hidden", t.hidden},
        {"feature_dim", t.feature_dim},
        {"debug_checks", t.debug_checks},
        {"augment",
         {{"noise_std", t.augment.noise_std},
          {"scale_jitter", t.augment.scale_jitter},
          {"mask_fraction", t.augment.mask_fraction}}}}},
      {"probe", {{"epochs", c.probe.epochs}, {"lr", c.probe.lr}, {"weight_decay", c.probe.weight_decay}}},
      {"seeds", c.seeds},
      {"variants", c.variants}};
}

std::string canonical_config(const ExperimentConfig& config) { return config_to_json(config).dump(); }

std::string config_digest(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DatasetBundle generate_data(const DataConfig& data, std::uint64_t run_seed) {
  if (data.groups.empty()) throw ContractError("data config has no groups");
  const std::uint64_t base = stage_seed(run_seed, SeedStage::kData);
  DatasetBundle out;
  for (std::size_t g = 0; g < data.groups.size(); ++g) {
    BlobSpec spec = data.blob;
    spec.n_per_domain = data.groups[g].n_per_domain;
    spec.rho = data.groups[g].rho;
    DatasetBundle part = generate(spec, data.groups[g].domains, mix_seed(base + g));
    out = g == 0 ? std::move(part) : concat(out, part);
  }
  return out;
}

}  // namespace diul
