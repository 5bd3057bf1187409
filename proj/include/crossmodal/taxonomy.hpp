#ifndef CROSSMODAL_TAXONOMY_HPP
#define CROSSMODAL_TAXONOMY_HPP

#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crossmodal/errors.hpp"

namespace crossmodal {

using LabelSet = std::set<int>;

// Rooted forest of category nodes. Labels are authored as full-path strings
// with ':' separators ("Transport:Land:Car"); parents are auto-created on
// first mention. Immutable once loaded.
class Taxonomy {
 public:
  struct Node {
    int id;
    std::string name;
    int parent;  // -1 for roots
    int level;   // 0 for roots
    std::string full_path;
  };

  static constexpr int kMaxLevels = 4;  // levels 0..3

  // Adds a full path, creating any missing ancestors. Returns the leaf id.
  // An explicit duplicate of a previously explicit row is rejected.
  int add_path(const std::string& full_path) {
    std::vector<std::string> parts = split_path(full_path);
    if (parts.empty()) throw DataError("taxonomy: empty path");
    if (parts.size() > static_cast<std::size_t>(kMaxLevels))
      throw DataError("taxonomy: path '" + full_path + "' exceeds max depth " +
                      std::to_string(kMaxLevels));
    int parent = -1;
    std::string path;
    int id = -1;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i].empty()) throw DataError("taxonomy: empty component in '" + full_path + "'");
      path = path.empty() ? parts[i] : path + ":" + parts[i];
      auto it = by_path_.find(path);
      if (it != by_path_.end()) {
        id = it->second;
      } else {
        id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{id, parts[i], parent, static_cast<int>(i), path});
        by_path_.emplace(path, id);
        children_.emplace_back();
        if (parent >= 0) children_[parent].push_back(id);
        max_level_ = std::max(max_level_, static_cast<int>(i));
      }
      parent = id;
    }
    if (explicit_.count(id)) throw DataError("taxonomy: duplicate path '" + full_path + "'");
    explicit_.insert(id);
    return id;
  }

  // One path per line; '#' starts a comment; blank lines ignored.
  static Taxonomy from_stream(std::istream& in) {
    Taxonomy t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      try {
        t.add_path(trimmed);
      } catch (const DataError& e) {
        throw DataError("taxonomy line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return t;
  }

  static Taxonomy from_lines(const std::vector<std::string>& lines) {
    Taxonomy t;
    for (const auto& l : lines) t.add_path(l);
    return t;
  }

  std::size_t size() const { return nodes_.size(); }
  int max_level() const { return max_level_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  const Node& node(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
      throw DataError("taxonomy: unknown node id " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id)];
  }

  int find(const std::string& full_path) const {
    auto it = by_path_.find(full_path);
    if (it == by_path_.end()) throw DataError("taxonomy: unknown label '" + full_path + "'");
    return it->second;
  }

  bool contains(const std::string& full_path) const { return by_path_.count(full_path) != 0; }

  const std::vector<int>& children(int id) const {
    node(id);
    return children_[static_cast<std::size_t>(id)];
  }

  int level_of(int id) const { return node(id).level; }

  std::vector<int> roots() const {
    std::vector<int> r;
    for (const auto& n : nodes_)
      if (n.parent < 0) r.push_back(n.id);
    return r;
  }

  // Level-0 ancestor of a label.
  int top_level_of(int id) const {
    int cur = node(id).id;
    while (nodes_[static_cast<std::size_t>(cur)].parent >= 0)
      cur = nodes_[static_cast<std::size_t>(cur)].parent;
    return cur;
  }

  std::vector<int> ancestors(int id) const {  // self first, root last
    std::vector<int> out;
    int cur = node(id).id;
    while (cur >= 0) {
      out.push_back(cur);
      cur = nodes_[static_cast<std::size_t>(cur)].parent;
    }
    return out;
  }

  // Ancestor closure: if a node is present, all its ancestors are too.
  LabelSet expand_labels(const LabelSet& labels) const {
    LabelSet out;
    for (int id : labels)
      for (int a : ancestors(id)) out.insert(a);
    return out;
  }

  LabelSet level_slice(const LabelSet& labels, int level) const {
    if (level < 0 || level > max_level_)
      throw DataError("level_slice: level " + std::to_string(level) + " out of range [0," +
                      std::to_string(max_level_) + "]");
    LabelSet out;
    for (int id : labels)
      if (level_of(id) == level) out.insert(id);
    return out;
  }

  // Restriction of a label set to one top-level category's subtree.
  LabelSet subtree_slice(const LabelSet& labels, int root_id) const {
    LabelSet out;
    for (int id : labels)
      if (top_level_of(id) == root_id) out.insert(id);
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split_path(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ':')) parts.push_back(trim(cur));
    return parts;
  }

  std::vector<Node> nodes_;
  std::map<std::string, int> by_path_;
  std::vector<std::vector<int>> children_;
  std::set<int> explicit_;
  int max_level_ = 0;
};

}  // namespace crossmodal

#endif
