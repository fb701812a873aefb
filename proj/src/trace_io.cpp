#include <charconv>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "tvc/simulator.hpp"

namespace tvc::sim {

namespace {

// Shortest round-trip decimal form, deterministic across platforms.
void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

void append_fixed2(std::string& out, double v) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.2f", v);
    out.append(buf, static_cast<std::size_t>(n));
}

std::size_t emit_ns2(const Trace& trace, std::ostream& out) {
    std::string buf;
    buf.reserve(1 << 16);
    for (std::size_t i = 0; i < trace.nodes.size(); ++i) {
        const NodeTrace& node = trace.nodes[i];
        const std::string prefix = "$node_(" + std::to_string(i) + ")";
        buf += prefix + " set X_ ";
        append_fixed2(buf, node.initial.x);
        buf += "\n" + prefix + " set Y_ ";
        append_fixed2(buf, node.initial.y);
        buf += "\n" + prefix + " set Z_ 0.00\n";
    }
    for (std::size_t i = 0; i < trace.nodes.size(); ++i) {
        const std::string prefix = "$node_(" + std::to_string(i) + ")";
        for (const Waypoint& w : trace.nodes[i].waypoints) {
            buf += "$ns_ at ";
            append_fixed2(buf, w.t);
            buf += " \"" + prefix + " setdest ";
            append_fixed2(buf, w.x);
            buf += " ";
            append_fixed2(buf, w.y);
            buf += " ";
            append_fixed2(buf, w.speed);
            buf += "\"\n";
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(ErrorCode::IO_ERROR, "ns2 trace write failed");
    return buf.size();
}

std::size_t emit_csv(const Trace& trace, std::ostream& out) {
    std::string buf;
    buf.reserve(1 << 20);
    buf += "t,node,x,y,on\n";
    std::size_t total = 0;
    auto flush = [&] {
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        total += buf.size();
        buf.clear();
    };
    for (std::size_t i = 0; i < trace.nodes.size(); ++i) {
        for (const Sample& s : trace.nodes[i].samples) {
            append_double(buf, s.t);
            buf += ',';
            buf += std::to_string(i);
            buf += ',';
            append_double(buf, s.x);
            buf += ',';
            append_double(buf, s.y);
            buf += ',';
            buf += s.on ? '1' : '0';
            buf += '\n';
            if (buf.size() > (1 << 20)) flush();
        }
    }
    flush();
    if (!out) throw Error(ErrorCode::IO_ERROR, "csv trace write failed");
    return total;
}

}  // namespace

std::size_t emit(const Trace& trace, TraceFormat format, std::ostream& out) {
    if (trace.nodes.empty()) throw Error(ErrorCode::INVARIANT_ERROR, "empty trace");
    return format == TraceFormat::NS2 ? emit_ns2(trace, out) : emit_csv(trace, out);
}

std::string metadata_json(const Trace& trace) {
    std::ostringstream out;
    out << "{\n"
        << "  \"seed\": " << trace.seed << ",\n"
        << "  \"duration_s\": " << trace.duration << ",\n"
        << "  \"dt_s\": " << trace.dt << ",\n"
        << "  \"nodes\": " << trace.nodes.size() << ",\n"
        << "  \"profile_digest\": \"" << trace.profile_digest << "\"\n"
        << "}\n";
    return out.str();
}

}  // namespace tvc::sim
