// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_GRAPH_HPP_
#define CVB_GRAPH_HPP_

#include <cstddef>
#include <istream>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace cvb {

// Directed acyclic graph over named vertices.  Construction validates that
// edges reference declared nodes, are unique, and form no directed cycle.
class Dag {
 public:
  Dag(std::vector<std::string> nodes,
      std::vector<std::pair<std::string, std::string>> edges);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::size_t>& parents(std::size_t v) const {
    return parents_[v];
  }
  const std::vector<std::size_t>& children(std::size_t v) const {
    return children_[v];
  }
  // Throws std::invalid_argument for unknown names.
  std::size_t index(const std::string& name) const;
  std::set<std::size_t> indices(const std::set<std::string>& names) const;

  // Copy of this graph with one more edge; throws if it creates a cycle.
  Dag with_edge(const std::string& parent, const std::string& child) const;

  const std::vector<std::pair<std::string, std::string>>& edges() const {
    return edges_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::pair<std::string, std::string>> edges_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
};

// Nodes reachable from `sources` along active trails given `given`, by the
// Bayes-ball algorithm.  Sources themselves are included.
std::set<std::size_t> reachable(const Dag& g, const std::set<std::size_t>& sources,
                                const std::set<std::size_t>& given);

// True iff every node of `a` is d-separated from every node of `b` given
// `given`.  The three sets must be pairwise disjoint.
bool d_separated(const Dag& g, const std::set<std::string>& a,
                 const std::set<std::string>& b,
                 const std::set<std::string>& given);

struct CollapsibilityReport {
  bool collapsible = false;
  // Pairs of collapsed nodes that are not d-separated given
  // observed + parameterized.
  std::vector<std::pair<std::string, std::string>> failing_pairs;
  // Result of the joint query: each collapsed node against the rest.
  bool jointly_separated = false;
};

CollapsibilityReport check_collapsible(const Dag& g,
                                       const std::set<std::string>& observed,
                                       const std::set<std::string>& parameterized,
                                       const std::set<std::string>& collapsed);

// Plain-text graph description:
//   parent -> child          (one edge per line)
//   observe: a, b
//   parameterize: c
//   collapse: d, e
// Blank lines and lines starting with '#' are ignored.  Nodes are declared
// implicitly by edges or directives.
struct GraphQuery {
  Dag graph;
  std::set<std::string> observed;
  std::set<std::string> parameterized;
  std::set<std::string> collapsed;
};

GraphQuery parse_graph_query(std::istream& in, const std::string& source_name);

}  // namespace cvb

#endif  // CVB_GRAPH_HPP_
