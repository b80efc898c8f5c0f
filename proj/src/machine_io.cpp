#include "pdfabench/machine_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pdfabench/error.hpp"

namespace pdfabench {

using nlohmann::json;

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string machine_to_json_line(Pdfa const& pdfa) {
    std::string out = "{\"machine_id\":" + json(pdfa.machine_id()).dump() +
                      ",\"n_states\":" + std::to_string(pdfa.n_states()) + ",\"states\":[";
    for (std::size_t s = 0; s < pdfa.n_states(); ++s) {
        if (s) out += ',';
        out += json(pdfa.state_names()[s]).dump();
    }
    out += "],\"transitions\":[";
    bool first = true;
    for (std::size_t s = 0; s < pdfa.n_states(); ++s) {
        for (Symbol x = 0; x < kAlphabetSize; ++x) {
            auto const& t = pdfa.rows()[s][x];
            if (!t) continue;
            if (!first) out += ',';
            first = false;
            out += "{\"from\":" + std::to_string(s) + ",\"symbol\":" + std::to_string(x) +
                   ",\"to\":" + std::to_string(t->next) + ",\"p\":" + format_double(t->p) + "}";
        }
    }
    out += "]}";
    return out;
}

Pdfa machine_from_json_line(std::string const& text, std::string const& source, std::size_t line) {
    auto fail = [&](std::string const& what) -> ParseError { return ParseError(source, line, what); };
    json doc;
    try {
        doc = json::parse(text);
    } catch (json::parse_error const& e) {
        throw fail(e.what());
    }
    if (!doc.is_object()) throw fail("expected a JSON object");

    std::string id;
    std::vector<TransitionRow> rows;
    std::vector<std::string> names;
    try {
        id = doc.at("machine_id").get<std::string>();
        auto const n = doc.at("n_states").get<std::size_t>();
        if (n == 0) throw fail("n_states must be positive");
        rows.assign(n, TransitionRow{});
        if (doc.contains("states")) {
            names = doc.at("states").get<std::vector<std::string>>();
            if (names.size() != n) throw fail("'states' length differs from n_states");
        } else {
            for (std::size_t s = 0; s < n; ++s) names.push_back(default_state_name(s));
        }
        for (auto const& rec : doc.at("transitions")) {
            auto const from = rec.at("from").get<std::size_t>();
            auto const symbol = rec.at("symbol").get<int>();
            auto const to = rec.at("to").get<std::size_t>();
            auto const p = rec.at("p").get<double>();
            if (from >= n || to >= n) throw fail("transition references a state out of range");
            if (symbol != 0 && symbol != 1) throw fail("symbol must be 0 or 1");
            auto& slot = rows[from][static_cast<std::size_t>(symbol)];
            if (slot) throw fail("duplicate transition for (from, symbol): not unifilar");
            slot = Transition{static_cast<StateIndex>(to), p};
        }
    } catch (json::exception const& e) {
        throw fail(e.what());
    }

    Pdfa pdfa(id, std::move(names), std::move(rows));
    auto const report = validate(pdfa);
    if (report.has(ViolationKind::normalization) || report.has(ViolationKind::dangling_state) ||
        report.has(ViolationKind::not_strongly_connected)) {
        throw ValidationError(source + ":" + std::to_string(line) + ": machine '" + id +
                              "' is invalid: " + report.to_string());
    }
    return pdfa;
}

void write_library(std::ostream& out, std::vector<Pdfa> const& machines) {
    for (auto const& m : machines) out << machine_to_json_line(m) << '\n';
}

void write_library(std::filesystem::path const& path, std::vector<Pdfa> const& machines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    write_library(out, machines);
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::vector<Pdfa> read_library(std::istream& in, std::string const& source) {
    std::vector<Pdfa> machines;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        machines.push_back(machine_from_json_line(text, source, line));
    }
    return machines;
}

std::vector<Pdfa> read_library(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open machine library '" + path.string() + "'");
    return read_library(in, path.string());
}

}  // namespace pdfabench
