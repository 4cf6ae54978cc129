#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pve/datakit.hpp"
#include "pve/error.hpp"

namespace pve {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    fn(line, line_no);
  }
}

Label label_from_string(std::string_view s, std::size_t line_no) {
  if (s == "ai") return Label::ai;
  if (s == "human") return Label::human;
  throw Error(Errc::invalid_argument,
              "line " + std::to_string(line_no) + ": unknown label '" + std::string(s) + "'");
}

std::string slurp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text) {
  DatasetManifest manifest;
  std::set<std::string, std::less<>> seen;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw Error(Errc::invalid_argument,
                  "line " + std::to_string(line_no) + ": expected path<TAB>label<TAB>source");
    }
    if (!seen.emplace(fields[0]).second) {
      throw Error(Errc::invalid_argument, "line " + std::to_string(line_no) +
                                              ": duplicate path '" + std::string(fields[0]) + "'");
    }
    manifest.entries.push_back(
        {std::string(fields[0]), label_from_string(fields[1], line_no), std::string(fields[2])});
  });
  return manifest;
}

DatasetManifest read_manifest(const std::filesystem::path& file) {
  return parse_manifest(slurp(file));
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& e : manifest.entries) {
    out += e.path + '\t' + std::string(to_string(e.label)) + '\t' + e.source + '\n';
  }
  return out;
}

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "unknown";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw Error(Errc::invalid_argument, "unknown split '" + std::string(name) + "'");
}

std::vector<std::size_t> SplitAssignment::indices_of(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) out.push_back(i);
  }
  return out;
}

std::string format_split(const DatasetManifest& manifest, const SplitAssignment& split) {
  if (split.splits.size() != manifest.entries.size()) {
    throw Error(Errc::size_mismatch, "split does not cover the manifest");
  }
  std::string out;
  for (std::size_t i = 0; i < split.splits.size(); ++i) {
    out += manifest.entries[i].path + '\t' + std::string(to_string(split.splits[i])) + '\n';
  }
  return out;
}

SplitAssignment parse_split(const DatasetManifest& manifest, std::string_view text) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) index[manifest.entries[i].path] = i;
  std::vector<int> assigned(manifest.entries.size(), -1);
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw Error(Errc::invalid_argument,
                  "line " + std::to_string(line_no) + ": expected path<TAB>split");
    }
    const auto it = index.find(fields[0]);
    if (it == index.end()) {
      throw Error(Errc::invalid_argument, "line " + std::to_string(line_no) + ": path '" +
                                              std::string(fields[0]) + "' not in manifest");
    }
    assigned[it->second] = static_cast<int>(split_from_string(fields[1]));
  });
  SplitAssignment out;
  out.splits.reserve(assigned.size());
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (assigned[i] < 0) {
      throw Error(Errc::invalid_argument,
                  "split file has no entry for '" + manifest.entries[i].path + "'");
    }
    out.splits.push_back(static_cast<Split>(assigned[i]));
  }
  return out;
}

}  // namespace pve
