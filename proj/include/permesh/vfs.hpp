#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace permesh {

inline constexpr std::string_view kSdcardRoot = "/sdcard";

// "/sdcard/Android/data/<package>/files"
std::string sandbox_root(std::string_view package);

// True iff `path` equals `root` or lies below it at a segment boundary.
bool is_within(std::string_view root, std::string_view path);

// Lexical resolution of `relative` against the canonical absolute `root`.
// An absolute `relative` is accepted only when it already starts with `root`.
// Throws Error(escape_error) when the result leaves `root`, and
// Error(malformed_path) for empty input or embedded NUL.
std::string canonicalize(std::string_view root, std::string_view relative);

struct AppSandbox {
    std::string package;
    std::string root;
    friend bool operator==(const AppSandbox&, const AppSandbox&) = default;
};

enum class FsOp { read, write, mkdir, list, remove };

std::string_view to_string(FsOp op) noexcept;
std::optional<FsOp> fs_op_from_string(std::string_view s) noexcept;

// In-memory SD card. Directories and files only, no links; paths are
// canonical absolute strings under "/sdcard".
class VirtualFS {
public:
    VirtualFS();

    // Creates the directory chain for the app's sandbox; idempotent.
    AppSandbox assign_app_root(std::string_view package);

    bool exists(std::string_view path) const;
    bool is_dir(std::string_view path) const;

    // All operations take canonical absolute paths and throw Error with
    // not_found / is_directory / not_directory / not_empty.
    std::string read(std::string_view path) const;
    void write(std::string_view path, std::string data);  // creates missing parents
    void mkdir(std::string_view path);                    // creates missing parents
    std::vector<std::string> list(std::string_view path) const;
    void remove(std::string_view path);

    std::size_t node_count() const;

    // Directories are objects, files are strings. The root object is the
    // contents of "/sdcard".
    nlohmann::json dump() const;
    static VirtualFS load(const nlohmann::json& tree);

private:
    struct Node {
        bool is_dir = true;
        std::string data;
        std::map<std::string, std::unique_ptr<Node>, std::less<>> children;
    };

    const Node* lookup(std::string_view path) const;
    Node* lookup(std::string_view path);
    Node& ensure_dir(std::string_view path);

    static void dump_node(const Node& node, nlohmann::json& out);
    static void load_node(Node& node, const nlohmann::json& tree, const std::string& where);
    static std::size_t count(const Node& node);

    std::unique_ptr<Node> root_;
};

}  // namespace permesh
