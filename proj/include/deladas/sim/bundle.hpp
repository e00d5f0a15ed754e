#pragma once

#include <string>

#include "deladas/cdd.hpp"
#include "deladas/dsd.hpp"
#include "deladas/hash.hpp"
#include "deladas/xml.hpp"

namespace deladas::sim {

/// The serialized closure shipped to a thin server: the component type's
/// life-cycle descriptor, the instance identity, a content digest and the
/// signing principal. Signing is simulated: the digest covers the canonical
/// serialization of everything except the digest element.
struct Bundle {
    dsl::ComponentType descriptor;
    config::InstanceRef identity;
    std::string credential;
    std::string digest;

    bool operator==(const Bundle& other) const {
        return identity == other.identity && credential == other.credential &&
               digest == other.digest && descriptor.name == other.descriptor.name;
    }
};

namespace detail {

inline xml::Element bundle_to_xml(const Bundle& bundle, bool include_digest) {
    xml::Element root;
    root.name = "bundle";

    xml::Element descriptor;
    descriptor.name = "descriptor";
    descriptor.attributes.emplace_back("type", bundle.descriptor.name);
    descriptor.attributes.emplace_back("implementation", bundle.descriptor.implementation);
    descriptor.attributes.emplace_back("ref", bundle.descriptor.instantiate.object_ref);
    descriptor.attributes.emplace_back("class", bundle.descriptor.instantiate.class_name);
    for (const auto& arg : bundle.descriptor.instantiate.arguments) {
        xml::Element e;
        e.name = "argument";
        if (const auto* i = std::get_if<long long>(&arg)) {
            e.attributes.emplace_back("kind", "int");
            e.attributes.emplace_back("value", std::to_string(*i));
        } else {
            e.attributes.emplace_back("kind", "string");
            e.attributes.emplace_back("value", std::get<std::string>(arg));
        }
        descriptor.children.push_back(std::move(e));
    }
    for (const auto& sat : bundle.descriptor.satisfies) {
        xml::Element e;
        e.name = "endpoint";
        e.attributes.emplace_back("interface", sat.iface);
        descriptor.children.push_back(std::move(e));
    }
    for (const auto& port : bundle.descriptor.requires_) {
        xml::Element e;
        e.name = "port";
        e.attributes.emplace_back("name", port.port);
        e.attributes.emplace_back("interface", port.iface);
        for (const auto& bind : bundle.descriptor.binds)
            if (bind.port == port.port) e.attributes.emplace_back("setter", bind.setter.method);
        descriptor.children.push_back(std::move(e));
    }
    for (const auto& call : bundle.descriptor.initialise) {
        xml::Element e;
        e.name = "initialise";
        e.attributes.emplace_back("method", call.method);
        descriptor.children.push_back(std::move(e));
    }
    for (const auto& call : bundle.descriptor.destroy) {
        xml::Element e;
        e.name = "destroy";
        e.attributes.emplace_back("method", call.method);
        descriptor.children.push_back(std::move(e));
    }
    for (const auto& prop : bundle.descriptor.properties) {
        xml::Element e;
        e.name = "property";
        e.attributes.emplace_back("name", prop.name);
        e.attributes.emplace_back("kind", prop.dynamic ? "dynamic" : "constant");
        if (prop.binding == dsl::PropertySpec::Binding::Literal) {
            if (const auto* i = std::get_if<long long>(&prop.value))
                e.attributes.emplace_back("value", std::to_string(*i));
            else
                e.attributes.emplace_back("value", std::get<std::string>(prop.value));
        } else if (prop.binding == dsl::PropertySpec::Binding::Provider) {
            e.attributes.emplace_back("provider", prop.provider.method);
        }
        descriptor.children.push_back(std::move(e));
    }
    root.children.push_back(std::move(descriptor));

    xml::Element identity;
    identity.name = "identity";
    identity.attributes.emplace_back("host", bundle.identity.host);
    identity.attributes.emplace_back("type", bundle.identity.type);
    identity.attributes.emplace_back("index", std::to_string(bundle.identity.index));
    root.children.push_back(std::move(identity));

    if (include_digest) {
        xml::Element digest;
        digest.name = "digest";
        digest.attributes.emplace_back("value", bundle.digest);
        root.children.push_back(std::move(digest));
    }

    xml::Element credential;
    credential.name = "credential";
    credential.attributes.emplace_back("principal", bundle.credential);
    root.children.push_back(std::move(credential));
    return root;
}

} // namespace detail

/// Digest over the canonical serialization with the digest element omitted.
inline std::string bundle_digest(const Bundle& bundle) {
    return hex16(fnv1a64(xml::write(detail::bundle_to_xml(bundle, /*include_digest=*/false))));
}

/// Packages a component type for transmission to a host.
inline Bundle package_bundle(const dsl::ComponentType& type, const config::InstanceRef& identity,
                             std::string credential) {
    Bundle bundle{type, identity, std::move(credential), ""};
    bundle.digest = bundle_digest(bundle);
    return bundle;
}

inline std::string serialize_bundle(const Bundle& bundle) {
    return xml::write(detail::bundle_to_xml(bundle, /*include_digest=*/true));
}

struct BundleParseResult {
    std::optional<Bundle> bundle;
    std::string error;

    bool ok() const { return bundle.has_value(); }
};

inline BundleParseResult parse_bundle(std::string_view text) {
    BundleParseResult result;
    xml::ParseOutcome doc = xml::parse(text);
    if (!doc.ok()) {
        result.error = "malformed XML: " + doc.error;
        return result;
    }
    if (doc.root->name != "bundle") {
        result.error = "unknown element '" + doc.root->name + "'";
        return result;
    }
    Bundle bundle;
    for (const auto& child : doc.root->children) {
        if (child.name == "descriptor") {
            auto get = [&](const char* key) {
                const std::string* v = child.attribute(key);
                return v ? *v : std::string();
            };
            bundle.descriptor.name = get("type");
            bundle.descriptor.implementation = get("implementation");
            bundle.descriptor.instantiate.object_ref = get("ref");
            bundle.descriptor.instantiate.class_name = get("class");
            for (const auto& item : child.children) {
                if (item.name == "argument") {
                    const std::string* kind = item.attribute("kind");
                    const std::string* value = item.attribute("value");
                    if (!kind || !value) continue;
                    if (*kind == "int")
                        bundle.descriptor.instantiate.arguments.push_back(std::stoll(*value));
                    else
                        bundle.descriptor.instantiate.arguments.push_back(*value);
                } else if (item.name == "endpoint") {
                    if (const std::string* iface = item.attribute("interface")) {
                        bundle.descriptor.provides.push_back(*iface);
                        bundle.descriptor.satisfies.push_back(
                            {*iface, bundle.descriptor.instantiate.object_ref});
                    }
                } else if (item.name == "port") {
                    const std::string* name = item.attribute("name");
                    const std::string* iface = item.attribute("interface");
                    const std::string* setter = item.attribute("setter");
                    if (name && iface) {
                        bundle.descriptor.requires_.push_back({*iface, *name});
                        if (setter)
                            bundle.descriptor.binds.push_back(
                                {*name, {bundle.descriptor.instantiate.object_ref, *setter}});
                    }
                } else if (item.name == "initialise") {
                    if (const std::string* m = item.attribute("method"))
                        bundle.descriptor.initialise.push_back(
                            {bundle.descriptor.instantiate.object_ref, *m});
                } else if (item.name == "destroy") {
                    if (const std::string* m = item.attribute("method"))
                        bundle.descriptor.destroy.push_back(
                            {bundle.descriptor.instantiate.object_ref, *m});
                } else if (item.name == "property") {
                    dsl::PropertySpec prop;
                    if (const std::string* n = item.attribute("name")) prop.name = *n;
                    const std::string* kind = item.attribute("kind");
                    prop.dynamic = kind && *kind == "dynamic";
                    if (const std::string* v = item.attribute("value")) {
                        prop.binding = dsl::PropertySpec::Binding::Literal;
                        prop.value = *v;
                        prop.type = dsl::ValueType::String;
                    } else if (const std::string* p = item.attribute("provider")) {
                        prop.binding = dsl::PropertySpec::Binding::Provider;
                        prop.provider = {bundle.descriptor.instantiate.object_ref, *p};
                        prop.type = dsl::ValueType::Int;
                    }
                    bundle.descriptor.properties.push_back(std::move(prop));
                }
            }
        } else if (child.name == "identity") {
            if (const std::string* h = child.attribute("host")) bundle.identity.host = *h;
            if (const std::string* t = child.attribute("type")) bundle.identity.type = *t;
            if (const std::string* i = child.attribute("index"))
                bundle.identity.index = std::stoi(*i);
        } else if (child.name == "digest") {
            if (const std::string* v = child.attribute("value")) bundle.digest = *v;
        } else if (child.name == "credential") {
            if (const std::string* p = child.attribute("principal")) bundle.credential = *p;
        } else {
            result.error = "unknown element '" + child.name + "'";
            return result;
        }
    }
    result.bundle = std::move(bundle);
    return result;
}

} // namespace deladas::sim
