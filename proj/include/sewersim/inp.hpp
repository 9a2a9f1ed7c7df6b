#ifndef SEWERSIM_INP_HPP
#define SEWERSIM_INP_HPP

#include "sewersim/network.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace sewersim {

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

struct InpRecord {
    std::vector<std::string> fields;
    std::string comment;  // trailing ';' comment, without the semicolon
    int line = 0;
};

struct InpSection {
    std::string name;     // upper-case, without brackets
    std::vector<InpRecord> records;
};

/// Tokenized INP text: ordered sections of whitespace-delimited records.
struct InpDocument {
    std::vector<std::string> leading_comments;
    std::vector<InpSection> sections;

    InpSection& section(const std::string& name) {
        for (auto& s : sections)
            if (s.name == name) return s;
        sections.push_back({name, {}});
        return sections.back();
    }

    const InpSection* find(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }
};

namespace detail {

inline std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

inline std::string trim(std::string_view sv) {
    auto b = sv.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    auto e = sv.find_last_not_of(" \t\r\n");
    return std::string(sv.substr(b, e - b + 1));
}

inline double parse_number(const std::string& field, int line, const char* what) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (first != last && *first == '+') ++first; // from_chars rejects a leading '+'
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last)
        throw ParseError(line, std::string("malformed ") + what + " '" + field + "'");
    return value;
}

// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline void require_fields(const InpRecord& rec, std::size_t n, const char* section) {
    if (rec.fields.size() < n)
        throw ParseError(rec.line, std::string("record in [") + section + "] needs at least " +
                                       std::to_string(n) + " fields");
}

} // namespace detail

inline InpDocument parse_inp_document(const std::string& text) {
    InpDocument doc;
    InpSection* current = nullptr;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string comment;
        auto semi = raw.find(';');
        if (semi != std::string::npos) {
            comment = detail::trim(raw.substr(semi + 1));
            raw = raw.substr(0, semi);
        }
        std::string line = detail::trim(raw);
        if (line.empty()) {
            if (!comment.empty() && !current) doc.leading_comments.push_back(comment);
            continue;
        }
        if (line.front() == '[') {
            auto close = line.find(']');
            if (close == std::string::npos)
                throw ParseError(lineno, "unterminated section header");
            std::string name = detail::upper(detail::trim(line.substr(1, close - 1)));
            doc.sections.push_back({name, {}});
            current = &doc.sections.back();
            continue;
        }
        if (!current) throw ParseError(lineno, "record before any section header");
        InpRecord rec;
        rec.comment = comment;
        rec.line = lineno;
        std::istringstream fs(line);
        std::string f;
        while (fs >> f) rec.fields.push_back(f);
        current->records.push_back(std::move(rec));
    }
    return doc;
}

inline const std::vector<std::string> kSupportedSections = {
    "TITLE",   "OPTIONS", "JUNCTIONS", "OUTFALLS", "STORAGE",     "CONDUITS",
    "PUMPS",   "XSECTIONS", "DWF",     "INFLOWS",  "PATTERNS",    "COORDINATES"};

namespace detail {

// Visit every record of every section with the given name (sections may
// repeat in a document).
template <typename Fn>
void for_each_record(const InpDocument& doc, const std::string& name, Fn&& fn) {
    for (const auto& sec : doc.sections)
        if (sec.name == name)
            for (const auto& rec : sec.records) fn(rec);
}

} // namespace detail

struct ParseResult {
    Network network;
    std::vector<std::string> warnings;
};

/**
 * Materialize a Network from INP text. Supported sections are listed in
 * kSupportedSections; anything else is skipped with a warning. Units are
 * SI only: a `;units X` comment or an [OPTIONS] FLOW_UNITS other than CMS
 * is rejected rather than converted.
 */
inline ParseResult parse_inp(const std::string& text) {
    InpDocument doc = parse_inp_document(text);
    ParseResult result;
    Network& net = result.network;

    for (const auto& c : doc.leading_comments) {
        std::istringstream cs(c);
        std::string key, value;
        if (cs >> key >> value && detail::upper(key) == "UNITS" && detail::upper(value) != "SI")
            throw ParseError(0, "unsupported unit system '" + value + "' (SI required)");
    }

    for (const auto& sec : doc.sections) {
        if (std::find(kSupportedSections.begin(), kSupportedSections.end(), sec.name) ==
            kSupportedSections.end())
            result.warnings.push_back("section " + sec.name + " ignored");
    }

    detail::for_each_record(doc, "OPTIONS", [&](const InpRecord& rec) {
        if (rec.fields.size() >= 2 && detail::upper(rec.fields[0]) == "FLOW_UNITS" &&
            detail::upper(rec.fields[1]) != "CMS")
            throw ParseError(rec.line, "unsupported FLOW_UNITS '" + rec.fields[1] +
                                           "' (CMS required)");
    });

    detail::for_each_record(doc, "JUNCTIONS", [&](const InpRecord& rec) {
            detail::require_fields(rec, 3, "JUNCTIONS");
            Junction j;
            j.id = rec.fields[0];
            j.invert_elev = detail::parse_number(rec.fields[1], rec.line, "invert elevation");
            j.rim_elev = j.invert_elev +
                         detail::parse_number(rec.fields[2], rec.line, "max depth");
            net.add_junction(j);
        });
    detail::for_each_record(doc, "OUTFALLS", [&](const InpRecord& rec) {
            detail::require_fields(rec, 2, "OUTFALLS");
            Outfall o;
            o.id = rec.fields[0];
            o.invert_elev = detail::parse_number(rec.fields[1], rec.line, "invert elevation");
            net.add_outfall(o);
        });
    detail::for_each_record(doc, "STORAGE", [&](const InpRecord& rec) {
            detail::require_fields(rec, 8, "STORAGE");
            if (detail::upper(rec.fields[4]) != "FUNCTIONAL")
                throw ParseError(rec.line, "only FUNCTIONAL constant-area storage supported");
            StorageTank t;
            t.id = rec.fields[0];
            t.invert_elev = detail::parse_number(rec.fields[1], rec.line, "invert elevation");
            t.max_depth = detail::parse_number(rec.fields[2], rec.line, "max depth");
            // FUNCTIONAL A1 A2 A0 with A1 = A2 = 0: constant area A0.
            double a1 = detail::parse_number(rec.fields[5], rec.line, "area coefficient");
            double a2 = detail::parse_number(rec.fields[6], rec.line, "area exponent");
            if (a1 != 0.0 || a2 != 0.0)
                throw ParseError(rec.line, "only constant storage area supported (A1=A2=0)");
            t.surface_area = detail::parse_number(rec.fields[7], rec.line, "storage area");
            net.add_tank(t);
        });

    auto known_node = [&](const std::string& id, int line) {
        if (net.node_index(id) == npos)
            throw ParseError(line, "reference to undefined node '" + id + "'");
    };

    detail::for_each_record(doc, "CONDUITS", [&](const InpRecord& rec) {
            detail::require_fields(rec, 5, "CONDUITS");
            Conduit c;
            c.id = rec.fields[0];
            c.from_node = rec.fields[1];
            c.to_node = rec.fields[2];
            known_node(c.from_node, rec.line);
            known_node(c.to_node, rec.line);
            c.length = detail::parse_number(rec.fields[3], rec.line, "length");
            c.manning_n = detail::parse_number(rec.fields[4], rec.line, "manning n");
            if (rec.fields.size() > 5)
                c.offset_up = detail::parse_number(rec.fields[5], rec.line, "inlet offset");
            if (rec.fields.size() > 6)
                c.offset_dn = detail::parse_number(rec.fields[6], rec.line, "outlet offset");
            net.add_conduit(c);
        });
    detail::for_each_record(doc, "PUMPS", [&](const InpRecord& rec) {
            detail::require_fields(rec, 6, "PUMPS");
            Pump p;
            p.id = rec.fields[0];
            p.from_node = rec.fields[1];
            p.to_node = rec.fields[2];
            known_node(p.from_node, rec.line);
            known_node(p.to_node, rec.line);
            p.rated_flow = detail::parse_number(rec.fields[3], rec.line, "rated flow");
            p.start_depth = detail::parse_number(rec.fields[4], rec.line, "start depth");
            p.stop_depth = detail::parse_number(rec.fields[5], rec.line, "stop depth");
            net.add_pump(p);
        });
    detail::for_each_record(doc, "XSECTIONS", [&](const InpRecord& rec) {
            detail::require_fields(rec, 3, "XSECTIONS");
            auto li = net.link_index(rec.fields[0]);
            if (li == npos)
                throw ParseError(rec.line, "reference to undefined link '" + rec.fields[0] + "'");
            if (net.link(li).kind != LinkKind::Conduit)
                throw ParseError(rec.line, "cross-section given for non-conduit '" +
                                               rec.fields[0] + "'");
            if (detail::upper(rec.fields[1]) != "CIRCULAR")
                throw ParseError(rec.line, "unsupported cross-section shape '" + rec.fields[1] +
                                               "' (CIRCULAR required)");
            net.link_mutable(li).diameter =
                detail::parse_number(rec.fields[2], rec.line, "diameter");
        });
    detail::for_each_record(doc, "DWF", [&](const InpRecord& rec) {
            detail::require_fields(rec, 3, "DWF");
            if (detail::upper(rec.fields[1]) != "FLOW")
                throw ParseError(rec.line, "only FLOW constituent supported in [DWF]");
            known_node(rec.fields[0], rec.line);
            auto& node = net.node_mutable(net.node_index(rec.fields[0]));
            node.base_inflow = detail::parse_number(rec.fields[2], rec.line, "baseline flow");
            if (rec.fields.size() > 3) node.pattern_id = rec.fields[3];
        });
    detail::for_each_record(doc, "INFLOWS", [&](const InpRecord& rec) {
            detail::require_fields(rec, 3, "INFLOWS");
            if (detail::upper(rec.fields[1]) != "FLOW")
                throw ParseError(rec.line, "only FLOW constituent supported in [INFLOWS]");
            known_node(rec.fields[0], rec.line);
            net.node_mutable(net.node_index(rec.fields[0])).base_inflow =
                detail::parse_number(rec.fields[2], rec.line, "constant inflow");
        });
    detail::for_each_record(doc, "PATTERNS", [&](const InpRecord& rec) {
            detail::require_fields(rec, 2, "PATTERNS");
            std::vector<double> mult;
            for (std::size_t i = 1; i < rec.fields.size(); ++i) {
                if (i == 1 && detail::upper(rec.fields[1]) == "HOURLY") continue;
                mult.push_back(detail::parse_number(rec.fields[i], rec.line, "multiplier"));
            }
            auto existing = net.patterns().find(rec.fields[0]);
            if (existing != net.patterns().end()) {
                std::vector<double> joined = existing->second;
                joined.insert(joined.end(), mult.begin(), mult.end());
                net.set_pattern(rec.fields[0], std::move(joined));
            } else {
                net.set_pattern(rec.fields[0], std::move(mult));
            }
        });
    detail::for_each_record(doc, "COORDINATES", [&](const InpRecord& rec) {
            detail::require_fields(rec, 3, "COORDINATES");
            known_node(rec.fields[0], rec.line);
            auto& node = net.node_mutable(net.node_index(rec.fields[0]));
            node.coord.x = detail::parse_number(rec.fields[1], rec.line, "x coordinate");
            node.coord.y = detail::parse_number(rec.fields[2], rec.line, "y coordinate");
        });

    net.freeze();
    return result;
}

/// Serialize a network to INP text; parse_inp(write_inp(n)) == n field for field.
inline std::string write_inp(const Network& net) {
    using detail::format_number;
    std::ostringstream out;
    out << ";units SI\n";
    out << "[OPTIONS]\n";
    out << "FLOW_UNITS CMS\n\n";

    out << "[JUNCTIONS]\n;;Name Invert MaxDepth\n";
    for (const auto& n : net.nodes())
        if (n.kind == NodeKind::Junction)
            out << n.id << ' ' << format_number(n.invert_elev) << ' '
                << format_number(n.rim_elev - n.invert_elev) << '\n';
    out << "\n[OUTFALLS]\n;;Name Invert Type\n";
    for (const auto& n : net.nodes())
        if (n.kind == NodeKind::Outfall)
            out << n.id << ' ' << format_number(n.invert_elev) << " FREE\n";
    out << "\n[STORAGE]\n;;Name Invert MaxDepth InitDepth Shape A1 A2 A0\n";
    for (const auto& n : net.nodes())
        if (n.kind == NodeKind::Storage)
            out << n.id << ' ' << format_number(n.invert_elev) << ' '
                << format_number(n.max_depth) << " 0 FUNCTIONAL 0 0 "
                << format_number(n.surface_area) << '\n';
    out << "\n[CONDUITS]\n;;Name From To Length ManningN InOffset OutOffset\n";
    for (const auto& l : net.links())
        if (l.kind == LinkKind::Conduit)
            out << l.id << ' ' << l.from_id << ' ' << l.to_id << ' '
                << format_number(l.length) << ' ' << format_number(l.manning_n) << ' '
                << format_number(l.offset_up) << ' ' << format_number(l.offset_dn) << '\n';
    out << "\n[PUMPS]\n;;Name From To RatedFlow StartDepth StopDepth\n";
    for (const auto& l : net.links())
        if (l.kind == LinkKind::Pump)
            out << l.id << ' ' << l.from_id << ' ' << l.to_id << ' '
                << format_number(l.rated_flow) << ' ' << format_number(l.start_depth) << ' '
                << format_number(l.stop_depth) << '\n';
    out << "\n[XSECTIONS]\n;;Link Shape Geom1\n";
    for (const auto& l : net.links())
        if (l.kind == LinkKind::Conduit)
            out << l.id << " CIRCULAR " << format_number(l.diameter) << '\n';
    out << "\n[DWF]\n;;Node Constituent Baseline Pattern\n";
    for (const auto& n : net.nodes())
        if (n.kind == NodeKind::Junction && (n.base_inflow != 0.0 || !n.pattern_id.empty())) {
            out << n.id << " FLOW " << format_number(n.base_inflow);
            if (!n.pattern_id.empty()) out << ' ' << n.pattern_id;
            out << '\n';
        }
    out << "\n[PATTERNS]\n;;Name Multipliers\n";
    for (const auto& [pid, mult] : net.patterns()) {
        out << pid;
        for (double m : mult) out << ' ' << format_number(m);
        out << '\n';
    }
    out << "\n[COORDINATES]\n;;Node X Y\n";
    for (const auto& n : net.nodes())
        out << n.id << ' ' << format_number(n.coord.x) << ' ' << format_number(n.coord.y)
            << '\n';
    return out.str();
}

} // namespace sewersim

#endif
