#include <fstream>
#include <sstream>

#include "json.hpp"
#include "symalias/taint.hpp"

namespace symalias {

std::string_view to_string(SinkClass c) {
  switch (c) {
    case SinkClass::CopyLike: return "copy-like";
    case SinkClass::FormatLike: return "format-like";
    case SinkClass::CommandExec: return "command-exec";
  }
  return "?";
}

namespace {

constexpr uint32_t kMaxVarArgs = 8;

template <class T>
const T* find_named(const std::vector<T>& v, std::string_view name) {
  for (const auto& x : v)
    if (x.name == name) return &x;
  return nullptr;
}

template <class T>
void upsert(std::vector<T>& v, T x) {
  for (auto& y : v)
    if (y.name == x.name) {
      y = std::move(x);
      return;
    }
  v.push_back(std::move(x));
}

std::vector<SummaryFlow> flows(uint32_t from_lo, uint32_t from_hi, std::vector<int32_t> to) {
  std::vector<SummaryFlow> out;
  for (uint32_t f = from_lo; f <= from_hi; ++f)
    for (int32_t t : to) out.push_back({f, t});
  return out;
}

std::vector<int32_t> range(int32_t lo, int32_t hi) {
  std::vector<int32_t> v;
  for (int32_t i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

}  // namespace

const SourceModel* TaintModels::source(std::string_view name) const { return find_named(sources, name); }
const SinkModel* TaintModels::sink(std::string_view name) const { return find_named(sinks, name); }
const LibrarySummary* TaintModels::summary(std::string_view name) const {
  return find_named(summaries, name);
}

TaintModels default_models() {
  TaintModels m;
  const int32_t R = SummaryFlow::kReturn;
  const uint32_t last = kMaxVarArgs - 1;
  m.sources = {
      {"recv", 1, false, 2, 0},     {"recvfrom", 1, false, 2, 0},
      {"read", 1, false, 2, 0},     {"fread", 0, false, std::nullopt, 3},
      {"fgets", 0, false, 1, 2},    {"BIO_read", 1, false, 2, std::nullopt},
      {"BIO_gets", 1, false, 2, std::nullopt}, {"SSL_read", 1, false, 2, std::nullopt},
      {"getenv", std::nullopt, true, std::nullopt, std::nullopt},
  };
  std::vector<uint32_t> var_from_2;
  for (uint32_t i = 2; i <= last; ++i) var_from_2.push_back(i);
  m.sinks = {
      {"strcpy", SinkClass::CopyLike, {1}, 0, std::nullopt},
      {"strncpy", SinkClass::CopyLike, {1}, 0, 2},
      {"memcpy", SinkClass::CopyLike, {1}, 0, 2},
      {"memmove", SinkClass::CopyLike, {1}, 0, 2},
      {"sprintf", SinkClass::FormatLike, var_from_2, 0, std::nullopt},
      {"sscanf", SinkClass::FormatLike, {0}, 2, std::nullopt},
      {"strcat", SinkClass::CopyLike, {1}, 0, std::nullopt},
      {"strncat", SinkClass::CopyLike, {1}, 0, 2},
      {"system", SinkClass::CommandExec, {0}, std::nullopt, std::nullopt},
      {"popen", SinkClass::CommandExec, {0}, std::nullopt, std::nullopt},
      {"execve", SinkClass::CommandExec, {0, 1}, std::nullopt, std::nullopt},
  };
  const std::string copy = "String Copy", idx = "String Index", split = "String Split",
                    toint = "String to Int", other = "Other";
  m.summaries = {
      {"strcpy", copy, flows(1, 1, {0})},
      {"strncpy", copy, flows(1, 1, {0})},
      {"strlcpy", copy, flows(1, 1, {0})},
      {"memcpy", copy, flows(1, 1, {0})},
      {"memmove", copy, flows(1, 1, {0})},
      {"sprintf", copy, flows(1, last, {0})},
      {"snprintf", copy, flows(2, last, {0})},
      {"vsnprintf", copy, flows(2, 3, {0})},
      {"strcat", copy, flows(1, 1, {0})},
      {"strncat", copy, flows(1, 1, {0})},
      {"sscanf", copy, flows(0, 0, range(2, static_cast<int32_t>(last)))},
      {"strdup", copy, flows(0, 0, {R})},
      {"strstr", idx, flows(0, 0, {R})},
      {"strchr", idx, flows(0, 0, {R})},
      {"strrchr", idx, flows(0, 0, {R})},
      {"strpbrk", idx, flows(0, 0, {R})},
      {"stristr", idx, flows(0, 0, {R})},
      {"strtok", split, flows(0, 0, {R})},
      {"strtok_r", split, flows(0, 0, {R, 2})},
      {"strsep", split, flows(0, 0, {R})},
      {"atoi", toint, flows(0, 0, {R})},
      {"atol", toint, flows(0, 0, {R})},
      {"atoll", toint, flows(0, 0, {R})},
      {"strtol", toint, flows(0, 0, {R})},
      {"strtoll", toint, flows(0, 0, {R})},
      {"strtoul", toint, flows(0, 0, {R})},
      {"hsearch_r", other, flows(0, 0, {2})},
      {"index", other, flows(0, 0, {R})},
      {"strlen", other, flows(0, 0, {R})},
  };
  return m;
}

namespace {

using nlohmann::json;

std::optional<uint32_t> opt_arg(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<uint32_t>();
}

int32_t flow_target(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "ret") return SummaryFlow::kReturn;
    throw ConfigError("flow target must be an argument index or \"ret\"");
  }
  return j.get<int32_t>();
}

SinkClass parse_sink_class(const std::string& s) {
  if (s == "copy-like") return SinkClass::CopyLike;
  if (s == "format-like") return SinkClass::FormatLike;
  if (s == "command-exec") return SinkClass::CommandExec;
  throw ConfigError("unknown sink class '" + s + "'");
}

}  // namespace

TaintModels load_models_text(const std::string& text, const TaintModels& base) {
  TaintModels m = base;
  try {
    json cfg = json::parse(text);
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : cfg.items())
      if (k != "sources" && k != "sinks" && k != "summaries" && k != "caps")
        throw ConfigError("unknown config key '" + k + "'");
    for (const auto& s : cfg.value("sources", json::array())) {
      SourceModel x;
      x.name = s.at("name").get<std::string>();
      x.buffer_arg = opt_arg(s, "buffer_arg");
      x.taints_return = s.value("returns", false);
      x.length_arg = opt_arg(s, "length_arg");
      x.fd_arg = opt_arg(s, "fd_arg");
      if (!x.buffer_arg && !x.taints_return)
        throw ConfigError("source '" + x.name + "' taints nothing");
      upsert(m.sources, std::move(x));
    }
    for (const auto& s : cfg.value("sinks", json::array())) {
      SinkModel x;
      x.name = s.at("name").get<std::string>();
      x.cls = parse_sink_class(s.value("class", std::string("copy-like")));
      x.src_args = s.at("src_args").get<std::vector<uint32_t>>();
      x.dst_arg = opt_arg(s, "dst_arg");
      x.len_arg = opt_arg(s, "len_arg");
      upsert(m.sinks, std::move(x));
    }
    for (const auto& s : cfg.value("summaries", json::array())) {
      LibrarySummary x;
      x.name = s.at("name").get<std::string>();
      x.category = s.value("category", std::string("Other"));
      for (const auto& f : s.at("flows")) x.flows.push_back({f.at("from").get<uint32_t>(), flow_target(f.at("to"))});
      upsert(m.summaries, std::move(x));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return m;
}

TaintModels load_models(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_models_text(ss.str(), default_models());
}

}  // namespace symalias
