#pragma once

#include <string>
#include <vector>

#include "errors.hpp"
#include "simulate.hpp"

namespace gbv {

// Parses "name", "name(a)" or "name(a,b)" spec strings used by the data
// generators ("gaussian(1.0)", "uniform(-1,1)", "weibull(1.5,2)").
struct ParsedSpec {
  std::string name;
  std::vector<double> args;
};

inline ParsedSpec parse_spec_string(const std::string& text) {
  ParsedSpec out;
  const auto open = text.find('(');
  if (open == std::string::npos) {
    out.name = text;
    return out;
  }
  if (text.back() != ')') throw ArgumentError("malformed spec string: " + text);
  out.name = text.substr(0, open);
  std::string inner = text.substr(open + 1, text.size() - open - 2);
  size_t pos = 0;
  while (pos < inner.size()) {
    size_t comma = inner.find(',', pos);
    if (comma == std::string::npos) comma = inner.size();
    const std::string piece = inner.substr(pos, comma - pos);
    try {
      size_t used = 0;
      out.args.push_back(std::stod(piece, &used));
    } catch (const std::exception&) {
      throw ArgumentError("malformed numeric argument in spec string: " + text);
    }
    pos = comma + 1;
  }
  return out;
}

inline CovariateSpec parse_covariate_spec(const std::string& text) {
  const ParsedSpec s = parse_spec_string(text);
  if (s.name == "gaussian") return CovariateSpec::gaussian(s.args.empty() ? 1.0 : s.args[0]);
  if (s.name == "rademacher") return CovariateSpec::rademacher();
  if (s.name == "uniform") {
    if (s.args.size() != 2) throw ArgumentError("uniform covariate spec needs (lo,hi): " + text);
    return CovariateSpec::bounded_uniform(s.args[0], s.args[1]);
  }
  if (s.name == "constant") return CovariateSpec::constant(s.args.empty() ? 1.0 : s.args[0]);
  throw ArgumentError("unknown covariate spec: " + text);
}

inline BaselineSpec parse_baseline_spec(const std::string& text) {
  const ParsedSpec s = parse_spec_string(text);
  if (s.name == "exponential") return BaselineSpec::exponential(s.args.empty() ? 1.0 : s.args[0]);
  if (s.name == "weibull") {
    if (s.args.size() != 2) throw ArgumentError("weibull baseline needs (shape,scale): " + text);
    return BaselineSpec::weibull(s.args[0], s.args[1]);
  }
  throw ArgumentError("unknown baseline spec: " + text);
}

inline CensorSpec parse_censor_spec(const std::string& text) {
  const ParsedSpec s = parse_spec_string(text);
  if (s.name == "none") return CensorSpec::none();
  if (s.name == "exponential") return CensorSpec::exponential(s.args.empty() ? 1.0 : s.args[0]);
  if (s.name == "uniform") {
    if (s.args.size() != 1) throw ArgumentError("uniform censor spec needs (hi): " + text);
    return CensorSpec::uniform(s.args[0]);
  }
  throw ArgumentError("unknown censor spec: " + text);
}

inline NoiseSpec parse_noise_spec(const std::string& text) {
  const ParsedSpec s = parse_spec_string(text);
  if (s.name == "gaussian") return NoiseSpec::gaussian(s.args.empty() ? 1.0 : s.args[0]);
  if (s.name == "cauchy") return NoiseSpec::cauchy(s.args.empty() ? 1.0 : s.args[0]);
  if (s.name == "mixture") {
    if (s.args.size() < 2) throw ArgumentError("mixture noise needs (eps,outlier_scale): " + text);
    return NoiseSpec::mixture(s.args[0], s.args[1], s.args.size() > 2 ? s.args[2] : 1.0);
  }
  throw ArgumentError("unknown noise spec: " + text);
}

}  // namespace gbv
