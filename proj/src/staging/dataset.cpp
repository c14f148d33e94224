#include "tlmdp/staging/dataset.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::staging {
namespace {

using nlohmann::json;

const std::set<std::string> kFields = {"id",      "text",    "device",
                                       "subject", "vehicle", "theme",
                                       "emotion", "subject_keywords", "vehicle_keywords"};

std::string string_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw InputError(where + ": field '" + key + "' missing or not a string");
  }
  return obj[key].get<std::string>();
}

std::vector<std::string> list_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_array()) {
    throw InputError(where + ": field '" + key + "' missing or not an array");
  }
  std::vector<std::string> out;
  for (const json& item : obj[key]) {
    if (!item.is_string()) throw InputError(where + ": '" + key + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

std::vector<RhetoricalInput> read_dataset(std::istream& in) {
  std::vector<RhetoricalInput> inputs;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "dataset line " + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(where + ": " + e.what());
    }
    if (!obj.is_object()) throw InputError(where + ": record is not an object");
    for (const auto& [key, _] : obj.items()) {
      if (!kFields.count(key)) throw InputError(where + ": unknown field '" + key + "'");
    }
    RhetoricalInput input;
    input.id = string_field(obj, "id", where);
    input.text = string_field(obj, "text", where);
    input.truth.device = string_field(obj, "device", where);
    input.truth.subject = string_field(obj, "subject", where);
    input.truth.vehicle = string_field(obj, "vehicle", where);
    input.truth.theme = string_field(obj, "theme", where);
    input.truth.emotion = string_field(obj, "emotion", where);
    input.truth.subject_keywords = list_field(obj, "subject_keywords", where);
    input.truth.vehicle_keywords = list_field(obj, "vehicle_keywords", where);
    if (input.id.empty()) throw InputError(where + ": empty id");
    if (!ids.insert(input.id).second) throw InputError(where + ": duplicate id '" + input.id + "'");
    input.truth.validate(where);
    inputs.push_back(std::move(input));
  }
  return inputs;
}

std::vector<RhetoricalInput> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const std::vector<RhetoricalInput>& inputs) {
  for (const RhetoricalInput& input : inputs) {
    const FactorSet& f = input.truth;
    json obj = {{"id", input.id},           {"text", input.text},
                {"device", f.device},       {"subject", f.subject},
                {"vehicle", f.vehicle},     {"theme", f.theme},
                {"emotion", f.emotion},     {"subject_keywords", f.subject_keywords},
                {"vehicle_keywords", f.vehicle_keywords}};
    out << obj.dump() << '\n';
  }
}

}  // namespace tlmdp::staging
