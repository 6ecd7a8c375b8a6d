#include "maskcontrast/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

MC_NAMESPACE_BEGIN

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw DataError("config key " + key + ": cannot parse '" + value + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  // from_chars for double is not available in every libstdc++ we target.
  std::istringstream in(value);
  in.imbue(std::locale::classic());
  double v = 0;
  if (!(in >> v) || !(in >> std::ws).eof()) throw DataError("config key " + key + ": cannot parse '" + value + "'");
  return v;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  using Setter = std::function<void()>;
  const std::map<std::string, Setter> setters = {
      {"embed_dim", [&] { model.embed_dim = parse_number<int>(key, v); }},
      {"channels",
       [&] {
         model.channels.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) model.channels.push_back(parse_number<int>(key, trim(item)));
       }},
      {"input_size",
       [&] {
         model.input_height = model.input_width = parse_number<int>(key, v);
         input_size_set = true;
       }},
      {"crop_scale_min", [&] { augment.crop_scale_min = parse_real(key, v); }},
      {"crop_scale_max", [&] { augment.crop_scale_max = parse_real(key, v); }},
      {"aspect_min", [&] { augment.aspect_min = parse_real(key, v); }},
      {"aspect_max", [&] { augment.aspect_max = parse_real(key, v); }},
      {"flip_prob", [&] { augment.flip_prob = parse_real(key, v); }},
      {"brightness", [&] { augment.brightness = parse_real(key, v); }},
      {"contrast", [&] { augment.contrast = parse_real(key, v); }},
      {"saturation", [&] { augment.saturation = parse_real(key, v); }},
      {"grayscale_prob", [&] { augment.grayscale_prob = parse_real(key, v); }},
      {"min_object_area", [&] { augment.min_object_area = parse_real(key, v); }},
      {"max_retries", [&] { augment.max_retries = parse_number<int>(key, v); }},
      {"temperature", [&] { loss.temperature = parse_real(key, v); }},
      {"aux_weight", [&] { loss.aux_weight = parse_real(key, v); }},
      {"key_momentum", [&] { loss.momentum = parse_real(key, v); }},
      {"epochs", [&] { trainer.epochs = parse_number<int>(key, v); }},
      {"batch_size", [&] { trainer.batch_size = parse_number<int>(key, v); }},
      {"base_lr", [&] { trainer.base_lr = parse_real(key, v); }},
      {"sgd_momentum", [&] { trainer.sgd_momentum = parse_real(key, v); }},
      {"weight_decay", [&] { trainer.weight_decay = parse_real(key, v); }},
      {"poly_power", [&] { trainer.poly_power = parse_real(key, v); }},
      {"seed", [&] { trainer.seed = parse_number<std::uint64_t>(key, v); }},
      {"bank_size", [&] { trainer.bank_size = parse_number<int>(key, v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw DataError("unknown config key '" + key + "'");
  it->second();
}

void RunConfig::validate() const {
  model.validate();
  augment.validate();
  loss.validate();
  trainer.validate();
}

std::string RunConfig::dump() const {
  std::map<std::string, std::string> kv;
  std::string ch;
  for (std::size_t i = 0; i < model.channels.size(); ++i) ch += (i ? "," : "") + std::to_string(model.channels[i]);
  kv["embed_dim"] = std::to_string(model.embed_dim);
  kv["channels"] = ch;
  kv["input_size"] = std::to_string(model.input_height);
  kv["crop_scale_min"] = fmt(augment.crop_scale_min);
  kv["crop_scale_max"] = fmt(augment.crop_scale_max);
  kv["aspect_min"] = fmt(augment.aspect_min);
  kv["aspect_max"] = fmt(augment.aspect_max);
  kv["flip_prob"] = fmt(augment.flip_prob);
  kv["brightness"] = fmt(augment.brightness);
  kv["contrast"] = fmt(augment.contrast);
  kv["saturation"] = fmt(augment.saturation);
  kv["grayscale_prob"] = fmt(augment.grayscale_prob);
  kv["min_object_area"] = fmt(augment.min_object_area);
  kv["max_retries"] = std::to_string(augment.max_retries);
  kv["temperature"] = fmt(loss.temperature);
  kv["aux_weight"] = fmt(loss.aux_weight);
  kv["key_momentum"] = fmt(loss.momentum);
  kv["epochs"] = std::to_string(trainer.epochs);
  kv["batch_size"] = std::to_string(trainer.batch_size);
  kv["base_lr"] = fmt(trainer.base_lr);
  kv["sgd_momentum"] = fmt(trainer.sgd_momentum);
  kv["weight_decay"] = fmt(trainer.weight_decay);
  kv["poly_power"] = fmt(trainer.poly_power);
  kv["seed"] = std::to_string(trainer.seed);
  kv["bank_size"] = std::to_string(trainer.bank_size);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& source) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError(source + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw DataError(source + ":" + std::to_string(lineno) + ": empty key");
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

MC_NAMESPACE_END
