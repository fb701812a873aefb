#include "tvc/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tvc::config {

using nlohmann::json;
using model::Community;
using model::NodeProfile;
using model::OnOffKind;
using model::Placement;
using model::SpeedRange;
using model::TimePeriod;

namespace {

[[noreturn]] void schema_error(const std::string& at, const std::string& what) {
    throw Error(ErrorCode::SCHEMA_ERROR, at + ": " + what);
}

double get_number(const json& j, const char* key, const std::string& at) {
    if (!j.contains(key) || !j[key].is_number())
        schema_error(at, std::string("missing or non-numeric '") + key + "'");
    return j[key].get<double>();
}

SpeedRange parse_speed(const json& parent, const std::string& at) {
    if (!parent.contains("speed") || !parent["speed"].is_object())
        schema_error(at, "missing 'speed' object");
    SpeedRange v;
    v.v_min = get_number(parent["speed"], "min", at + ".speed");
    v.v_max = get_number(parent["speed"], "max", at + ".speed");
    return v;
}

Community parse_community(const json& j, double field_edge, const std::string& at) {
    Community c;
    if (!j.is_object()) schema_error(at, "community must be an object");
    c.id = j.value("id", std::string{});
    c.edge_length = get_number(j, "edge", at);
    if (j.contains("placement")) {
        if (!j["placement"].is_string() || j["placement"] != "random")
            schema_error(at, "placement must be the string \"random\"");
        c.placement = Placement::RANDOM;
    } else {
        const double x = get_number(j, "x", at);
        const double y = get_number(j, "y", at);
        c.rect = {x, y, x + c.edge_length, y + c.edge_length};
        c.is_roaming = x == 0.0 && y == 0.0 && c.edge_length == field_edge;
    }
    if (j.contains("speed")) c.speed = parse_speed(j, at);
    return c;
}

std::vector<double> parse_number_array(const json& j, const char* key, const std::string& at) {
    if (!j.contains(key) || !j[key].is_array())
        schema_error(at, std::string("missing array '") + key + "'");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) schema_error(at, std::string("non-numeric entry in '") + key + "'");
        out.push_back(v.get<double>());
    }
    return out;
}

TimePeriod parse_period(const json& j, double field_edge, const std::string& at) {
    TimePeriod p;
    p.duration = get_number(j, "duration_s", at);
    p.speed = parse_speed(j, at);
    if (!j.contains("communities") || !j["communities"].is_array() || j["communities"].empty())
        schema_error(at, "missing non-empty 'communities'");
    std::size_t ci = 0;
    for (const auto& cj : j["communities"])
        p.communities.push_back(
            parse_community(cj, field_edge, at + ".communities[" + std::to_string(ci++) + "]"));

    if (!j.contains("transition_matrix") || !j["transition_matrix"].is_array())
        schema_error(at, "missing 'transition_matrix'");
    for (const auto& row : j["transition_matrix"]) {
        if (!row.is_array()) schema_error(at, "transition_matrix rows must be arrays");
        std::vector<double> r;
        for (const auto& v : row) {
            if (!v.is_number()) schema_error(at, "non-numeric transition probability");
            r.push_back(v.get<double>());
        }
        p.transition.push_back(std::move(r));
    }
    p.mean_epoch_length = parse_number_array(j, "mean_epoch_length", at);
    p.max_pause = parse_number_array(j, "max_pause_s", at);
    return p;
}

OnOffKind parse_onoff_kind(const std::string& s, const std::string& at) {
    if (s == "always_on") return OnOffKind::ALWAYS_ON;
    if (s == "on_when_paused") return OnOffKind::ON_WHEN_PAUSED;
    if (s == "on_when_moving") return OnOffKind::ON_WHEN_MOVING;
    if (s == "fixed_prob") return OnOffKind::FIXED_PROB;
    schema_error(at, "unknown onoff kind '" + s + "'");
}

NodeTemplate parse_node(const json& j, const model::FieldSpec& field, const std::string& at) {
    NodeTemplate t;
    NodeProfile& node = t.prototype;
    if (!j.is_object()) schema_error(at, "node must be an object");
    if (!j.contains("id") || !j["id"].is_string()) schema_error(at, "missing string 'id'");
    node.id = j["id"].get<std::string>();
    node.field = field;
    if (j.contains("count")) {
        if (!j["count"].is_number_unsigned() || j["count"].get<std::size_t>() == 0)
            schema_error(at, "'count' must be a positive integer");
        t.count = j["count"].get<std::size_t>();
    }
    if (!j.contains("schedule") || !j["schedule"].is_array() || j["schedule"].empty())
        schema_error(at, "missing non-empty 'schedule'");
    std::size_t pi = 0;
    for (const auto& pj : j["schedule"])
        node.schedule.push_back(parse_period(pj, field.edge_length,
                                             at + ".schedule[" + std::to_string(pi++) + "]"));

    if (j.contains("onoff")) {
        const auto& oj = j["onoff"];
        if (!oj.is_object() || !oj.contains("kind") || !oj["kind"].is_string())
            schema_error(at, "onoff must be an object with a string 'kind'");
        node.onoff.kind = parse_onoff_kind(oj["kind"].get<std::string>(), at + ".onoff");
        if (node.onoff.kind == OnOffKind::FIXED_PROB) {
            if (!oj.contains("p_on") || !oj["p_on"].is_array())
                schema_error(at, "fixed_prob policy needs a 'p_on' array");
            // Either one array per period, or a single flat array applied to
            // every period with matching community count.
            if (!oj["p_on"].empty() && oj["p_on"][0].is_array()) {
                for (const auto& row : oj["p_on"])
                    node.onoff.p_on.push_back(row.get<std::vector<double>>());
            } else {
                const auto flat = oj["p_on"].get<std::vector<double>>();
                node.onoff.p_on.assign(node.schedule.size(), flat);
            }
        }
    }
    return t;
}

}  // namespace

Document load(const std::string& json_text) {
    json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded()) throw Error(ErrorCode::SCHEMA_ERROR, "document is not valid JSON");
    if (!root.is_object() || !root.contains("field") || !root["field"].is_object())
        throw Error(ErrorCode::SCHEMA_ERROR, "top level must contain a 'field' object");

    Document doc;
    doc.field.edge_length = get_number(root["field"], "edge_length", "field");
    if (!root.contains("nodes") || !root["nodes"].is_array() || root["nodes"].empty())
        throw Error(ErrorCode::SCHEMA_ERROR, "top level must contain a non-empty 'nodes' array");

    std::size_t index = 0;
    for (const auto& nj : root["nodes"]) {
        NodeTemplate t = parse_node(nj, doc.field, "nodes[" + std::to_string(index++) + "]");
        // Fixed-placement, single-count prototypes can be checked right away
        // so config errors surface before any generation work.
        if (!t.prototype.has_unresolved_placement()) model::validate(t.prototype);
        doc.nodes.push_back(std::move(t));
    }
    return doc;
}

Document load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO_ERROR, "cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load(buf.str());
}

std::vector<model::NodeProfile> load_and_validate(const std::string& json_text,
                                                  std::uint64_t seed) {
    const Document doc = load(json_text);
    std::vector<model::NodeProfile> templates;
    for (const auto& t : doc.nodes) {
        if (t.count == 1) {
            templates.push_back(t.prototype);
        } else {
            auto copies = model::replicate(t.prototype, t.count);
            templates.insert(templates.end(), copies.begin(), copies.end());
        }
    }
    return model::materialize(templates, seed);
}

std::string digest(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace tvc::config
