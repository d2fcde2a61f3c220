#include <json.hpp>

#include "bootkeeper/error.hpp"
#include "bootkeeper/validator.hpp"

namespace bootkeeper {

const char* prop_status_name(PropStatus s) {
  switch (s) {
    case PropStatus::Pass: return "pass";
    case PropStatus::Fail: return "fail";
    case PropStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

const char* property_id(Property p) {
  switch (p) {
    case Property::P1_TpmWritePresent: return "P1";
    case Property::P2_AuthenticHash: return "P2";
    case Property::P3_Atomicity: return "P3";
    case Property::P4_Completeness: return "P4";
  }
  return "?";
}

const char* property_name(Property p) {
  switch (p) {
    case Property::P1_TpmWritePresent: return "P1_TpmWritePresent";
    case Property::P2_AuthenticHash: return "P2_AuthenticHash";
    case Property::P3_Atomicity: return "P3_Atomicity";
    case Property::P4_Completeness: return "P4_Completeness";
  }
  return "?";
}

const char* overall_name(Overall o) {
  switch (o) {
    case Overall::Valid: return "valid";
    case Overall::Invalid: return "invalid";
    case Overall::Inconclusive: return "inconclusive";
  }
  return "?";
}

int exit_code(Overall o) {
  switch (o) {
    case Overall::Valid: return 0;
    case Overall::Invalid: return 1;
    case Overall::Inconclusive: return 3;
  }
  return 3;
}

namespace {

using nlohmann::json;

json ranges_json(const std::vector<AddressRange>& rs) {
  json a = json::array();
  for (const auto& r : rs) a.push_back({{"start", hex32(r.start)}, {"length", r.length}});
  return a;
}

json evidence_json(const Evidence& e) {
  json j;
  switch (e.kind) {
    case Evidence::Kind::Instr:
      j["kind"] = "instr";
      j["addr"] = hex32(e.addr);
      break;
    case Evidence::Kind::Range:
      j["kind"] = "range";
      j["start"] = hex32(e.range.start);
      j["length"] = e.range.length;
      break;
    case Evidence::Kind::Path: {
      j["kind"] = "path";
      json blocks = json::array();
      for (uint32_t b : e.path) blocks.push_back(hex32(b));
      j["blocks"] = blocks;
      break;
    }
  }
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

}  // namespace

std::string report_json(const Report& r, bool with_timings) {
  json j;
  j["image_sha1"] = r.image_sha1;
  j["overall"] = overall_name(r.overall);
  j["properties"] = json::array();
  for (const auto& v : r.verdicts) {
    json p;
    p["id"] = property_id(v.property);
    p["name"] = property_name(v.property);
    p["status"] = prop_status_name(v.status);
    p["evidence"] = json::array();
    for (const auto& e : v.evidence) p["evidence"].push_back(evidence_json(e));
    p["message"] = v.message;
    j["properties"].push_back(p);
  }
  if (r.coverage) {
    j["coverage"] = {{"measured", ranges_json(r.coverage->measured)},
                     {"reachable", ranges_json(r.coverage->reachable)},
                     {"unmeasured_reachable", ranges_json(r.coverage->unmeasured_reachable)},
                     {"conditionally_reachable", ranges_json(r.coverage->conditionally_reachable)}};
  } else {
    j["coverage"] = nullptr;
  }
  if (with_timings) {
    json t = json::object();
    for (const auto& [stage, ms] : r.timings_ms) t[stage] = ms;
    j["timings_ms"] = t;
  }
  const auto& c = r.config;
  j["config"] = {{"timeout_seconds", c.timeout_seconds},
                 {"max_states", c.exploration.max_states},
                 {"max_depth", c.exploration.max_depth},
                 {"loop_bound", c.exploration.loop_bound},
                 {"max_snapshots_per_site", c.exploration.max_snapshots_per_site},
                 {"indirect_cap", c.cfg.indirect_cap},
                 {"indirect_path_depth", c.cfg.path_depth},
                 {"indirect_max_paths", c.cfg.max_paths},
                 {"match_max_steps", c.match.max_steps}};
  return j.dump(2) + "\n";
}

std::string report_summary(const Report& r) {
  std::string s = "image " + r.image_sha1 + "\n";
  for (const auto& v : r.verdicts) {
    s += std::string(property_name(v.property)) + ": " + prop_status_name(v.status) + " - " + v.message + "\n";
    if (v.status == PropStatus::Fail) {
      size_t shown = 0;
      for (const auto& e : v.evidence) {
        if (++shown > 8) {
          s += "    ...\n";
          break;
        }
        switch (e.kind) {
          case Evidence::Kind::Instr: s += "    at " + hex32(e.addr); break;
          case Evidence::Kind::Range:
            s += "    range " + hex32(e.range.start) + "+" + std::to_string(e.range.length);
            break;
          case Evidence::Kind::Path: s += "    path of " + std::to_string(e.path.size()) + " blocks"; break;
        }
        s += e.note.empty() ? "\n" : " (" + e.note + ")\n";
      }
    }
  }
  s += std::string("overall: ") + overall_name(r.overall) + "\n";
  return s;
}

}  // namespace bootkeeper
