#include "permesh/vfs.hpp"

#include <utility>

#include "permesh/error.hpp"

namespace permesh {

using nlohmann::json;

std::string sandbox_root(std::string_view package) {
    return std::string(kSdcardRoot) + "/Android/data/" + std::string(package) + "/files";
}

bool is_within(std::string_view root, std::string_view path) {
    if (root == "/") {
        return path.starts_with('/');
    }
    return path == root || (path.size() > root.size() && path.starts_with(root) && path[root.size()] == '/');
}

std::string canonicalize(std::string_view root, std::string_view relative) {
    if (relative.empty()) {
        throw Error(Errc::malformed_path, "empty path");
    }
    if (relative.find('\0') != std::string_view::npos) {
        throw Error(Errc::malformed_path, "embedded NUL");
    }

    std::string_view rest = relative;
    std::vector<std::string_view> stack;
    auto push_segments = [&stack](std::string_view s) -> bool {
        while (!s.empty()) {
            const std::size_t slash = s.find('/');
            const std::string_view seg = s.substr(0, slash);
            s = slash == std::string_view::npos ? std::string_view{} : s.substr(slash + 1);
            if (seg.empty() || seg == ".") {
                continue;
            }
            if (seg == "..") {
                if (stack.empty()) {
                    return false;
                }
                stack.pop_back();
                continue;
            }
            stack.push_back(seg);
        }
        return true;
    };

    if (relative.starts_with('/')) {
        if (!relative.starts_with(root) ||
            (relative.size() > root.size() && relative[root.size()] != '/')) {
            throw Error(Errc::escape_error, std::string(relative));
        }
        rest = relative.substr(root.size());
    }
    push_segments(root);
    if (!push_segments(rest)) {
        throw Error(Errc::escape_error, std::string(relative));
    }

    std::string out;
    for (std::string_view seg : stack) {
        out += '/';
        out += seg;
    }
    if (out.empty()) {
        out = "/";
    }
    if (!is_within(root, out)) {
        throw Error(Errc::escape_error, std::string(relative));
    }
    return out;
}

std::string_view to_string(FsOp op) noexcept {
    switch (op) {
        case FsOp::read: return "read";
        case FsOp::write: return "write";
        case FsOp::mkdir: return "mkdir";
        case FsOp::list: return "list";
        case FsOp::remove: return "delete";
    }
    return "unknown";
}

std::optional<FsOp> fs_op_from_string(std::string_view s) noexcept {
    if (s == "read") return FsOp::read;
    if (s == "write") return FsOp::write;
    if (s == "mkdir") return FsOp::mkdir;
    if (s == "list") return FsOp::list;
    if (s == "delete") return FsOp::remove;
    return std::nullopt;
}

namespace {

std::vector<std::string_view> split_under_sdcard(std::string_view path) {
    if (!is_within(kSdcardRoot, path)) {
        throw Error(Errc::malformed_path, "not an SD card path: " + std::string(path));
    }
    std::vector<std::string_view> segs;
    std::string_view rest = path.substr(kSdcardRoot.size());
    while (!rest.empty()) {
        rest.remove_prefix(1);  // leading '/'
        const std::size_t slash = rest.find('/');
        segs.push_back(rest.substr(0, slash));
        rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);
    }
    return segs;
}

}  // namespace

VirtualFS::VirtualFS() : root_(std::make_unique<Node>()) {}

AppSandbox VirtualFS::assign_app_root(std::string_view package) {
    AppSandbox box{std::string(package), sandbox_root(package)};
    ensure_dir(box.root);
    return box;
}

const VirtualFS::Node* VirtualFS::lookup(std::string_view path) const {
    const Node* node = root_.get();
    for (std::string_view seg : split_under_sdcard(path)) {
        if (!node->is_dir) {
            throw Error(Errc::not_directory, std::string(path));
        }
        auto it = node->children.find(seg);
        if (it == node->children.end()) {
            return nullptr;
        }
        node = it->second.get();
    }
    return node;
}

VirtualFS::Node* VirtualFS::lookup(std::string_view path) {
    return const_cast<Node*>(std::as_const(*this).lookup(path));
}

VirtualFS::Node& VirtualFS::ensure_dir(std::string_view path) {
    Node* node = root_.get();
    for (std::string_view seg : split_under_sdcard(path)) {
        auto it = node->children.find(seg);
        if (it == node->children.end()) {
            it = node->children.emplace(std::string(seg), std::make_unique<Node>()).first;
        } else if (!it->second->is_dir) {
            throw Error(Errc::not_directory, std::string(path));
        }
        node = it->second.get();
    }
    return *node;
}

bool VirtualFS::exists(std::string_view path) const {
    try {
        return lookup(path) != nullptr;
    } catch (const Error&) {
        return false;
    }
}

bool VirtualFS::is_dir(std::string_view path) const {
    try {
        const Node* n = lookup(path);
        return n != nullptr && n->is_dir;
    } catch (const Error&) {
        return false;
    }
}

std::string VirtualFS::read(std::string_view path) const {
    const Node* n = lookup(path);
    if (n == nullptr) {
        throw Error(Errc::not_found, std::string(path));
    }
    if (n->is_dir) {
        throw Error(Errc::is_directory, std::string(path));
    }
    return n->data;
}

void VirtualFS::write(std::string_view path, std::string data) {
    const std::size_t slash = path.rfind('/');
    if (path == kSdcardRoot || slash == std::string_view::npos) {
        throw Error(Errc::is_directory, std::string(path));
    }
    Node& parent = ensure_dir(path.substr(0, slash));
    const std::string_view name = path.substr(slash + 1);
    auto it = parent.children.find(name);
    if (it == parent.children.end()) {
        auto file = std::make_unique<Node>();
        file->is_dir = false;
        it = parent.children.emplace(std::string(name), std::move(file)).first;
    } else if (it->second->is_dir) {
        throw Error(Errc::is_directory, std::string(path));
    }
    it->second->data = std::move(data);
}

void VirtualFS::mkdir(std::string_view path) {
    ensure_dir(path);
}

std::vector<std::string> VirtualFS::list(std::string_view path) const {
    const Node* n = lookup(path);
    if (n == nullptr) {
        throw Error(Errc::not_found, std::string(path));
    }
    if (!n->is_dir) {
        throw Error(Errc::not_directory, std::string(path));
    }
    std::vector<std::string> names;
    for (const auto& entry : n->children) {
        names.push_back(entry.first + (entry.second->is_dir ? "/" : ""));
    }
    return names;
}

void VirtualFS::remove(std::string_view path) {
    if (path == kSdcardRoot) {
        throw Error(Errc::is_directory, "refusing to remove the SD card root");
    }
    const std::size_t slash = path.rfind('/');
    Node* parent = lookup(path.substr(0, slash));
    if (parent == nullptr || !parent->is_dir) {
        throw Error(parent == nullptr ? Errc::not_found : Errc::not_directory, std::string(path));
    }
    auto it = parent->children.find(path.substr(slash + 1));
    if (it == parent->children.end()) {
        throw Error(Errc::not_found, std::string(path));
    }
    if (it->second->is_dir && !it->second->children.empty()) {
        throw Error(Errc::not_empty, std::string(path));
    }
    parent->children.erase(it);
}

std::size_t VirtualFS::count(const Node& node) {
    std::size_t n = 1;
    for (const auto& entry : node.children) {
        n += count(*entry.second);
    }
    return n;
}

std::size_t VirtualFS::node_count() const {
    return count(*root_);
}

void VirtualFS::dump_node(const Node& node, json& out) {
    out = json::object();
    for (const auto& [name, child] : node.children) {
        if (child->is_dir) {
            dump_node(*child, out[name]);
        } else {
            out[name] = child->data;
        }
    }
}

json VirtualFS::dump() const {
    json out;
    dump_node(*root_, out);
    return out;
}

void VirtualFS::load_node(Node& node, const json& tree, const std::string& where) {
    if (!tree.is_object()) {
        throw Error(Errc::parse_error, where + ": directory must be a JSON object");
    }
    for (const auto& [name, value] : tree.items()) {
        if (name.empty() || name == "." || name == ".." || name.find('/') != std::string::npos ||
            name.find('\0') != std::string::npos) {
            throw Error(Errc::parse_error, where + ": invalid entry name '" + name + "'");
        }
        auto child = std::make_unique<Node>();
        if (value.is_string()) {
            child->is_dir = false;
            child->data = value.get<std::string>();
        } else {
            load_node(*child, value, where + "/" + name);
        }
        node.children.emplace(name, std::move(child));
    }
}

VirtualFS VirtualFS::load(const json& tree) {
    VirtualFS fs;
    load_node(*fs.root_, tree, std::string(kSdcardRoot));
    return fs;
}

}  // namespace permesh
