// Apache License, Version 2.0, refer to LICENSE.txt

#include "cvb/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cvb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void require_disjoint(const std::set<std::size_t>& x,
                      const std::set<std::size_t>& y, const char* what) {
  for (auto v : x) {
    if (y.count(v)) throw std::invalid_argument(std::string(what) + ": sets overlap");
  }
}

}  // namespace

Dag::Dag(std::vector<std::string> nodes,
         std::vector<std::pair<std::string, std::string>> edges)
    : names_(std::move(nodes)), edges_(std::move(edges)) {
  std::map<std::string, std::size_t> lookup;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!lookup.emplace(names_[i], i).second) {
      throw std::invalid_argument("Dag: duplicate node '" + names_[i] + "'");
    }
  }
  parents_.resize(names_.size());
  children_.resize(names_.size());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [p, c] : edges_) {
    auto ip = lookup.find(p);
    auto ic = lookup.find(c);
    if (ip == lookup.end() || ic == lookup.end()) {
      throw std::invalid_argument("Dag: edge " + p + " -> " + c +
                                  " references an undeclared node");
    }
    if (ip->second == ic->second) {
      throw std::invalid_argument("Dag: self loop on '" + p + "'");
    }
    if (!seen.emplace(ip->second, ic->second).second) {
      throw std::invalid_argument("Dag: duplicate edge " + p + " -> " + c);
    }
    parents_[ic->second].push_back(ip->second);
    children_[ip->second].push_back(ic->second);
  }

  // Kahn's algorithm; leftover nodes lie on a cycle.
  std::vector<std::size_t> indegree(names_.size());
  for (std::size_t v = 0; v < names_.size(); ++v) indegree[v] = parents_[v].size();
  std::deque<std::size_t> ready;
  for (std::size_t v = 0; v < names_.size(); ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const auto v = ready.front();
    ready.pop_front();
    ++visited;
    for (auto c : children_[v]) {
      if (--indegree[c] == 0) ready.push_back(c);
    }
  }
  if (visited != names_.size()) {
    throw std::invalid_argument("Dag: graph contains a directed cycle");
  }
}

std::size_t Dag::index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) {
    throw std::invalid_argument("Dag: unknown node '" + name + "'");
  }
  return static_cast<std::size_t>(it - names_.begin());
}

std::set<std::size_t> Dag::indices(const std::set<std::string>& names) const {
  std::set<std::size_t> out;
  for (const auto& n : names) out.insert(index(n));
  return out;
}

Dag Dag::with_edge(const std::string& parent, const std::string& child) const {
  auto edges = edges_;
  edges.emplace_back(parent, child);
  return Dag(names_, std::move(edges));
}

// Bayes-ball (Shachter 1998).  A ball arriving from a child may pass to
// parents and children of an unobserved node; a ball arriving from a parent
// passes to children of an unobserved node and bounces back to parents of an
// observed one.
std::set<std::size_t> reachable(const Dag& g, const std::set<std::size_t>& sources,
                                const std::set<std::size_t>& given) {
  const std::size_t n = g.size();
  std::vector<char> top(n, 0), bottom(n, 0), visited(n, 0);
  // (node, arrived_from_child)
  std::deque<std::pair<std::size_t, bool>> queue;
  for (auto s : sources) queue.emplace_back(s, true);

  while (!queue.empty()) {
    const auto [v, from_child] = queue.front();
    queue.pop_front();
    visited[v] = 1;
    const bool observed = given.count(v) > 0;
    if (from_child && !observed) {
      if (!top[v]) {
        top[v] = 1;
        for (auto p : g.parents(v)) queue.emplace_back(p, true);
      }
      if (!bottom[v]) {
        bottom[v] = 1;
        for (auto c : g.children(v)) queue.emplace_back(c, false);
      }
    } else if (!from_child) {
      if (observed && !top[v]) {
        top[v] = 1;
        for (auto p : g.parents(v)) queue.emplace_back(p, true);
      }
      if (!observed && !bottom[v]) {
        bottom[v] = 1;
        for (auto c : g.children(v)) queue.emplace_back(c, false);
      }
    }
  }

  std::set<std::size_t> out;
  for (std::size_t v = 0; v < n; ++v) {
    if (visited[v] && !given.count(v)) out.insert(v);
  }
  return out;
}

bool d_separated(const Dag& g, const std::set<std::string>& a,
                 const std::set<std::string>& b,
                 const std::set<std::string>& given) {
  const auto ia = g.indices(a);
  const auto ib = g.indices(b);
  const auto iz = g.indices(given);
  require_disjoint(ia, ib, "d_separated");
  require_disjoint(ia, iz, "d_separated");
  require_disjoint(ib, iz, "d_separated");
  const auto reach = reachable(g, ia, iz);
  return std::none_of(ib.begin(), ib.end(),
                      [&](std::size_t v) { return reach.count(v) > 0; });
}

CollapsibilityReport check_collapsible(const Dag& g,
                                       const std::set<std::string>& observed,
                                       const std::set<std::string>& parameterized,
                                       const std::set<std::string>& collapsed) {
  const auto io = g.indices(observed);
  const auto ip = g.indices(parameterized);
  const auto ic = g.indices(collapsed);
  require_disjoint(io, ip, "check_collapsible");
  require_disjoint(io, ic, "check_collapsible");
  require_disjoint(ip, ic, "check_collapsible");

  std::set<std::string> given = observed;
  given.insert(parameterized.begin(), parameterized.end());

  CollapsibilityReport report;
  const std::vector<std::string> members(collapsed.begin(), collapsed.end());
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      if (!d_separated(g, {members[i]}, {members[j]}, given)) {
        report.failing_pairs.emplace_back(members[i], members[j]);
      }
    }
  }

  report.jointly_separated = true;
  for (const auto& x : members) {
    std::set<std::string> rest(collapsed);
    rest.erase(x);
    if (!rest.empty() && !d_separated(g, {x}, rest, given)) {
      report.jointly_separated = false;
    }
  }
  report.collapsible = report.failing_pairs.empty() && report.jointly_separated;
  return report;
}

GraphQuery parse_graph_query(std::istream& in, const std::string& source_name) {
  std::vector<std::string> nodes;
  std::set<std::string> declared;
  std::vector<std::pair<std::string, std::string>> edges;
  std::set<std::string> observed, parameterized, collapsed;

  auto declare = [&](const std::string& name) {
    if (declared.insert(name).second) nodes.push_back(name);
  };
  auto parse_list = [&](const std::string& body, std::size_t line_no) {
    std::set<std::string> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      if (item.find_first_of(" \t") != std::string::npos) {
        throw std::invalid_argument(source_name + ":" + std::to_string(line_no) +
                                    ": malformed node name '" + item + "'");
      }
      declare(item);
      out.insert(item);
    }
    return out;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto arrow = line.find("->");
    if (arrow != std::string::npos) {
      const auto p = trim(line.substr(0, arrow));
      const auto c = trim(line.substr(arrow + 2));
      if (p.empty() || c.empty() || p.find_first_of(" \t,") != std::string::npos ||
          c.find_first_of(" \t,") != std::string::npos) {
        throw std::invalid_argument(source_name + ":" + std::to_string(line_no) +
                                    ": malformed edge '" + line + "'");
      }
      declare(p);
      declare(c);
      edges.emplace_back(p, c);
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument(source_name + ":" + std::to_string(line_no) +
                                  ": expected 'parent -> child' or a directive");
    }
    const auto key = trim(line.substr(0, colon));
    auto values = parse_list(line.substr(colon + 1), line_no);
    std::set<std::string>* target = nullptr;
    if (key == "observe") target = &observed;
    else if (key == "parameterize") target = &parameterized;
    else if (key == "collapse") target = &collapsed;
    else {
      throw std::invalid_argument(source_name + ":" + std::to_string(line_no) +
                                  ": unknown directive '" + key + "'");
    }
    target->insert(values.begin(), values.end());
  }

  try {
    return GraphQuery{Dag(std::move(nodes), std::move(edges)), observed,
                      parameterized, collapsed};
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(source_name + ": " + e.what());
  }
}

}  // namespace cvb
