#include "pixembed/config.hpp"

#include <charconv>
#include <sstream>

#include "pixembed/errors.hpp"
#include "pixembed/report.hpp"

namespace pixembed {

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::WithPe: return "with_pe";
    case Variant::WithoutPe: return "without_pe";
    case Variant::NormOnly: return "norm_only";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  if (text == "with_pe") return Variant::WithPe;
  if (text == "without_pe") return Variant::WithoutPe;
  if (text == "norm_only") return Variant::NormOnly;
  throw DomainError("unknown variant '" + std::string(text) + "' (with_pe|without_pe|norm_only)");
}

std::vector<NoiseSpec> default_gaussian_cases() {
  using G = noise::Gaussian;
  return {noise::Identity{}, G{1, 1},   G{5, 1},    G{10, 2},  G{25, 5},
          G{50, 10},         G{75, 15}, G{100, 10}, G{150, 10}};
}

std::vector<NoiseSpec> default_salt_pepper_cases() {
  using S = noise::SaltPepper;
  return {noise::Identity{}, S{0.1, 25},  S{0.1, 50}, S{0.1, 100}, S{0.2, 50},
          S{0.3, 50},        S{0.4, 50},  S{0.5, 50}, S{0.5, 100}, S{0.6, 50},
          S{0.6, 100},       S{0.7, 50},  S{0.7, 100}, S{0.8, 100}};
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T v{};
  const std::string s = trim(value);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DomainError("config: bad value for '" + std::string(key) + "': '" + s + "'");
  }
  return v;
}

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

void ExperimentConfig::set(std::string_view key_in, std::string_view value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  auto size = [&] { return parse_number<std::size_t>(key, value); };
  auto i64 = [&] { return parse_number<std::int64_t>(key, value); };
  auto u64 = [&] { return parse_number<std::uint64_t>(key, value); };
  auto dbl = [&] { return parse_number<double>(key, value); };

  if (key == "train_images") train_images = value;
  else if (key == "train_labels") train_labels = value;
  else if (key == "test_images") test_images = value;
  else if (key == "test_labels") test_labels = value;
  else if (key == "data_dir") {
    const std::filesystem::path dir = value;
    train_images = dir / "train-images-idx3-ubyte";
    train_labels = dir / "train-labels-idx1-ubyte";
    test_images = dir / "t10k-images-idx3-ubyte";
    test_labels = dir / "t10k-labels-idx1-ubyte";
  } else if (key == "variant") variant = parse_variant(value);
  else if (key == "embedding_size") embedding_size = size();
  else if (key == "vocab_size") vocab_size = i64();
  else if (key == "multiplier") multiplier = i64();
  else if (key == "lr") adam.lr = dbl();
  else if (key == "beta1") adam.beta1 = dbl();
  else if (key == "beta2") adam.beta2 = dbl();
  else if (key == "adam_eps") adam.eps = dbl();
  else if (key == "batch_size") batch_size = size();
  else if (key == "epochs") epochs = size();
  else if (key == "patience") patience = size();
  else if (key == "init_seed") init_seed = u64();
  else if (key == "shuffle_seed") shuffle_seed = u64();
  else if (key == "noise_seed") noise_seed = u64();
  else if (key == "seed") init_seed = shuffle_seed = noise_seed = u64();
  else if (key == "subset") subset = size();
  else if (key == "test_subset") test_subset = size();
  else if (key == "out_dir") out_dir = value;
  else if (key == "variants") {
    suite_variants.clear();
    std::istringstream in(value);
    for (std::string v; std::getline(in, v, ',');) suite_variants.push_back(parse_variant(trim(v)));
  } else if (key == "gauss_case") {
    if (!gaussian_overridden_) gaussian_cases.clear();
    gaussian_overridden_ = true;
    gaussian_cases.push_back(parse_noise(value));
  } else if (key == "sp_case") {
    if (!salt_pepper_overridden_) salt_pepper_cases.clear();
    salt_pepper_overridden_ = true;
    salt_pepper_cases.push_back(parse_noise(value));
  } else {
    throw DomainError("config: unknown key '" + key + "'");
  }
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << "train_images = " << train_images.string() << '\n'
     << "train_labels = " << train_labels.string() << '\n'
     << "test_images = " << test_images.string() << '\n'
     << "test_labels = " << test_labels.string() << '\n'
     << "variant = " << to_string(variant) << '\n'
     << "embedding_size = " << embedding_size << '\n'
     << "vocab_size = " << vocab_size << '\n'
     << "multiplier = " << multiplier << '\n'
     << "lr = " << shortest(adam.lr) << '\n'
     << "beta1 = " << shortest(adam.beta1) << '\n'
     << "beta2 = " << shortest(adam.beta2) << '\n'
     << "adam_eps = " << shortest(adam.eps) << '\n'
     << "batch_size = " << batch_size << '\n'
     << "epochs = " << epochs << '\n'
     << "patience = " << patience << '\n'
     << "init_seed = " << init_seed << '\n'
     << "shuffle_seed = " << shuffle_seed << '\n'
     << "noise_seed = " << noise_seed << '\n'
     << "subset = " << subset << '\n'
     << "test_subset = " << test_subset << '\n'
     << "out_dir = " << out_dir.string() << '\n';
  os << "variants = ";
  for (std::size_t i = 0; i < suite_variants.size(); ++i) os << (i ? "," : "") << to_string(suite_variants[i]);
  os << '\n';
  for (const auto& c : gaussian_cases) os << "gauss_case = " << format_noise(c) << '\n';
  for (const auto& c : salt_pepper_cases) os << "sp_case = " << format_noise(c) << '\n';
  return os.str();
}

std::string ExperimentConfig::training_fingerprint(Variant v) const {
  std::ostringstream os;
  os << "variant = " << to_string(v) << '\n';
  if (v == Variant::WithPe) {
    os << "embedding_size = " << embedding_size << '\n'
       << "vocab_size = " << vocab_size << '\n'
       << "multiplier = " << multiplier << '\n';
  }
  os << "lr = " << shortest(adam.lr) << '\n'
     << "beta1 = " << shortest(adam.beta1) << '\n'
     << "beta2 = " << shortest(adam.beta2) << '\n'
     << "adam_eps = " << shortest(adam.eps) << '\n'
     << "batch_size = " << batch_size << '\n'
     << "epochs = " << epochs << '\n'
     << "patience = " << patience << '\n'
     << "init_seed = " << init_seed << '\n'
     << "shuffle_seed = " << shuffle_seed << '\n'
     << "subset = " << subset << '\n'
     << "test_subset = " << test_subset << '\n';
  return os.str();
}

void ExperimentConfig::validate() const {
  pixembed::validate(adam);
  if (embedding_size == 0) throw DomainError("embedding_size must be >= 1");
  if (vocab_size < 1) throw DomainError("vocab_size must be >= 1");
  if (multiplier < 1) throw DomainError("multiplier must be >= 1");
  if (batch_size == 0) throw DomainError("batch_size must be >= 1");
  if (epochs == 0) throw DomainError("epochs must be >= 1");
  if (suite_variants.empty()) throw DomainError("variants must name at least one variant");
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::istringstream in{std::string(text)};
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DomainError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    base.set(std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  return parse_config(read_text(path), std::move(base));
}

}  // namespace pixembed
