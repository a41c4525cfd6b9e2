#include "pixembed/noise.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

#include "pixembed/errors.hpp"

namespace pixembed {

namespace {

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_real(std::string_view s, std::string_view key) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DomainError("noise: bad value for " + std::string(key) + ": '" + std::string(s) + "'");
  }
  return v;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

void validate(const NoiseSpec& spec) {
  std::visit(Overloaded{
                 [](const noise::Identity&) {},
                 [](const noise::Gaussian& g) {
                   if (!std::isfinite(g.mu) || !(g.sigma >= 0) || !std::isfinite(g.sigma)) {
                     throw DomainError("gaussian noise needs finite mu and sigma >= 0");
                   }
                 },
                 [](const noise::SaltPepper& s) {
                   if (!(s.p >= 0 && s.p <= 1)) throw DomainError("salt-pepper p must lie in [0,1]");
                   if (s.value < 0 || s.value > 255) throw DomainError("salt-pepper v must lie in [0,255]");
                 },
             },
             spec);
}

NoiseSpec parse_noise(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string kind;
  in >> kind;
  std::vector<std::pair<std::string, std::string>> kv;
  for (std::string tok; in >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw DomainError("noise: expected key=value, got '" + tok + "'");
    kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  auto take = [&](std::string_view key) -> std::string {
    for (auto& [k, v] : kv) {
      if (k == key) return v;
    }
    throw DomainError("noise: missing " + std::string(key) + " in '" + std::string(text) + "'");
  };
  auto expect_keys = [&](std::size_t n) {
    if (kv.size() != n) throw DomainError("noise: unexpected parameters in '" + std::string(text) + "'");
  };

  NoiseSpec spec;
  if (kind == "none") {
    expect_keys(0);
    spec = noise::Identity{};
  } else if (kind == "gauss") {
    expect_keys(2);
    spec = noise::Gaussian{parse_real(take("mu"), "mu"), parse_real(take("sigma"), "sigma")};
  } else if (kind == "sp") {
    expect_keys(2);
    const double v = parse_real(take("v"), "v");
    if (v != std::floor(v)) throw DomainError("salt-pepper v must be an integer");
    spec = noise::SaltPepper{parse_real(take("p"), "p"), static_cast<int>(v)};
  } else {
    throw DomainError("unknown noise kind '" + kind + "' (expected none, gauss or sp)");
  }
  validate(spec);
  return spec;
}

std::string format_noise(const NoiseSpec& spec) {
  return std::visit(Overloaded{
                        [](const noise::Identity&) -> std::string { return "none"; },
                        [](const noise::Gaussian& g) {
                          return "gauss mu=" + shortest(g.mu) + " sigma=" + shortest(g.sigma);
                        },
                        [](const noise::SaltPepper& s) {
                          return "sp p=" + shortest(s.p) + " v=" + std::to_string(s.value);
                        },
                    },
                    spec);
}

std::string describe_noise(const NoiseSpec& spec) {
  return std::visit(Overloaded{
                        [](const noise::Identity&) -> std::string { return "Standard test dataset"; },
                        [](const noise::Gaussian& g) {
                          return "mu=" + shortest(g.mu) + ", sigma=" + shortest(g.sigma);
                        },
                        [](const noise::SaltPepper& s) {
                          return "p=" + shortest(s.p) + ", v=" + std::to_string(s.value);
                        },
                    },
                    spec);
}

Image apply_gaussian(const Image& image, double mu, double sigma, std::mt19937_64& rng) {
  Image out;
  if (sigma == 0) {
    for (std::size_t i = 0; i < kImagePixels; ++i) {
      out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::round(image.pixels[i] + mu), 0.0, 255.0));
    }
    return out;
  }
  std::normal_distribution<double> dist(mu, sigma);
  for (std::size_t i = 0; i < kImagePixels; ++i) {
    const double noisy = std::round(image.pixels[i] + dist(rng));  // half away from zero
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(noisy, 0.0, 255.0));
  }
  return out;
}

Image apply_salt_pepper(const Image& image, double p, int value, std::mt19937_64& rng) {
  Image out = image;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto v = static_cast<std::uint8_t>(value);
  for (auto& px : out.pixels) {
    if (u(rng) < p) px = v;
  }
  return out;
}

Image apply_noise(const Image& image, const NoiseSpec& spec, std::mt19937_64& rng) {
  return std::visit(Overloaded{
                        [&](const noise::Identity&) { return image; },
                        [&](const noise::Gaussian& g) { return apply_gaussian(image, g.mu, g.sigma, rng); },
                        [&](const noise::SaltPepper& s) {
                          return apply_salt_pepper(image, s.p, s.value, rng);
                        },
                    },
                    spec);
}

LabeledDataset corrupt_dataset(const LabeledDataset& dataset, const NoiseSpec& spec,
                               std::uint64_t seed) {
  validate(spec);
  LabeledDataset out;
  out.name = dataset.name;
  out.labels = dataset.labels;
  out.images.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(i));
    out.images.push_back(apply_noise(dataset.images[i], spec, rng));
  }
  return out;
}

}  // namespace pixembed
