#pragma once

#include <algorithm>
#include <charconv>
#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "deladas/dsd.hpp"
#include "deladas/hash.hpp"
#include "deladas/printer.hpp"
#include "deladas/xml.hpp"

namespace deladas::config {

// ---------------------------------------------------------------------------
// Configuration descriptions
// ---------------------------------------------------------------------------

struct InstanceRef {
    std::string host;
    std::string type;
    int index = 1;  // 1-based, contiguous per (host, type)

    auto operator<=>(const InstanceRef&) const = default;

    std::string str() const { return host + "/" + type + "/" + std::to_string(index); }
};

struct ConnectionRef {
    InstanceRef client;
    std::string port;
    InstanceRef server;

    auto operator<=>(const ConnectionRef&) const = default;

    std::string str() const { return client.str() + "." + port + "->" + server.str(); }
};

/// One concrete configuration: instances placed on hosts plus the
/// client-to-server connection topology. Instances and connections are kept
/// sorted, so structural equality is plain equality.
struct ConfigurationDescription {
    std::string dsd_ref;
    std::vector<InstanceRef> instances;
    std::vector<ConnectionRef> connections;

    bool operator==(const ConfigurationDescription&) const = default;

    bool has_instance(const InstanceRef& ref) const {
        return std::binary_search(instances.begin(), instances.end(), ref);
    }

    void normalize() {
        std::sort(instances.begin(), instances.end());
        instances.erase(std::unique(instances.begin(), instances.end()), instances.end());
        std::sort(connections.begin(), connections.end());
        connections.erase(std::unique(connections.begin(), connections.end()),
                          connections.end());
    }
};

/// Stable reference "<name>@<hash>" binding configurations to the exact
/// resolved description they were solved against.
inline std::string dsd_reference(const dsl::DesiredStateDescription& dsd) {
    return dsd.name + "@" + hex16(fnv1a64(dsl::pretty_print(dsd)));
}

/// Checks the invariants every configuration must satisfy regardless of any
/// constraint set: connection endpoints exist, a client port is bound at
/// most once, and instance indices are contiguous per (host, type).
inline std::optional<std::string> structural_defect(const ConfigurationDescription& cdd) {
    for (std::size_t i = 1; i < cdd.instances.size(); ++i) {
        const auto& prev = cdd.instances[i - 1];
        const auto& cur = cdd.instances[i];
        if (prev == cur) return "duplicate instance " + cur.str();
        bool same_group = prev.host == cur.host && prev.type == cur.type;
        if (cur.index != (same_group ? prev.index + 1 : 1))
            return "instance indices not contiguous at " + cur.str();
    }
    if (!cdd.instances.empty() && cdd.instances.front().index != 1)
        return "instance indices not contiguous at " + cdd.instances.front().str();
    for (std::size_t i = 0; i < cdd.connections.size(); ++i) {
        const auto& conn = cdd.connections[i];
        if (!cdd.has_instance(conn.client))
            return "dangling endpoint: connection references missing client " + conn.client.str();
        if (!cdd.has_instance(conn.server))
            return "dangling endpoint: connection references missing server " + conn.server.str();
        if (i > 0 && cdd.connections[i - 1].client == conn.client &&
            cdd.connections[i - 1].port == conn.port)
            return "port bound more than once: " + conn.client.str() + "." + conn.port;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// XML serialization
// ---------------------------------------------------------------------------

inline std::string serialize_cdd(const ConfigurationDescription& cdd) {
    xml::Element root;
    root.name = "cdd";
    root.attributes.emplace_back("dsd", cdd.dsd_ref);
    for (const auto& inst : cdd.instances) {
        xml::Element e;
        e.name = "instance";
        e.attributes.emplace_back("host", inst.host);
        e.attributes.emplace_back("type", inst.type);
        e.attributes.emplace_back("index", std::to_string(inst.index));
        root.children.push_back(std::move(e));
    }
    for (const auto& conn : cdd.connections) {
        xml::Element e;
        e.name = "connection";
        e.attributes.emplace_back("client-host", conn.client.host);
        e.attributes.emplace_back("client-type", conn.client.type);
        e.attributes.emplace_back("client-index", std::to_string(conn.client.index));
        e.attributes.emplace_back("port", conn.port);
        e.attributes.emplace_back("server-host", conn.server.host);
        e.attributes.emplace_back("server-type", conn.server.type);
        e.attributes.emplace_back("server-index", std::to_string(conn.server.index));
        root.children.push_back(std::move(e));
    }
    return xml::write(root);
}

struct CddParseResult {
    std::optional<ConfigurationDescription> cdd;
    std::string error;

    bool ok() const { return cdd.has_value(); }
};

namespace detail {

inline bool parse_index(const std::string& text, int& out) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size() && out >= 1;
}

} // namespace detail

inline CddParseResult parse_cdd(std::string_view text) {
    CddParseResult result;
    xml::ParseOutcome doc = xml::parse(text);
    if (!doc.ok()) {
        result.error = "malformed XML: " + doc.error;
        return result;
    }
    const xml::Element& root = *doc.root;
    if (root.name != "cdd") {
        result.error = "unknown element '" + root.name + "' (expected 'cdd')";
        return result;
    }
    ConfigurationDescription cdd;
    for (const auto& [key, value] : root.attributes) {
        if (key != "dsd") {
            result.error = "unknown attribute '" + key + "' on 'cdd'";
            return result;
        }
        cdd.dsd_ref = value;
    }
    auto take = [&](const xml::Element& e, const char* key, std::string& out) {
        if (const std::string* v = e.attribute(key)) {
            out = *v;
            return true;
        }
        result.error = "element '" + e.name + "' is missing attribute '" + std::string(key) + "'";
        return false;
    };
    for (const auto& child : root.children) {
        if (!child.children.empty()) {
            result.error = "element '" + child.name + "' must be empty";
            return result;
        }
        if (child.name == "instance") {
            static const char* known[] = {"host", "type", "index"};
            for (const auto& [key, value] : child.attributes) {
                if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
                    result.error = "unknown attribute '" + key + "' on 'instance'";
                    return result;
                }
            }
            InstanceRef inst;
            std::string index;
            if (!take(child, "host", inst.host) || !take(child, "type", inst.type) ||
                !take(child, "index", index))
                return result;
            if (!detail::parse_index(index, inst.index)) {
                result.error = "invalid instance index '" + index + "'";
                return result;
            }
            cdd.instances.push_back(std::move(inst));
        } else if (child.name == "connection") {
            static const char* known[] = {"client-host", "client-type", "client-index",
                                          "port",        "server-host", "server-type",
                                          "server-index"};
            for (const auto& [key, value] : child.attributes) {
                if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
                    result.error = "unknown attribute '" + key + "' on 'connection'";
                    return result;
                }
            }
            ConnectionRef conn;
            std::string client_index, server_index;
            if (!take(child, "client-host", conn.client.host) ||
                !take(child, "client-type", conn.client.type) ||
                !take(child, "client-index", client_index) || !take(child, "port", conn.port) ||
                !take(child, "server-host", conn.server.host) ||
                !take(child, "server-type", conn.server.type) ||
                !take(child, "server-index", server_index))
                return result;
            if (!detail::parse_index(client_index, conn.client.index) ||
                !detail::parse_index(server_index, conn.server.index)) {
                result.error = "invalid connection index";
                return result;
            }
            cdd.connections.push_back(std::move(conn));
        } else {
            result.error = "unknown element '" + child.name + "'";
            return result;
        }
    }
    cdd.normalize();
    if (auto defect = structural_defect(cdd)) {
        result.error = *defect;
        return result;
    }
    result.cdd = std::move(cdd);
    return result;
}

} // namespace deladas::config
