#ifndef GLASSTN_INDEX_HPP
#define GLASSTN_INDEX_HPP

#include <cstdint>
#include <string>
#include <utility>

namespace glasstn {

// A labeled tensor leg. Two Index values contract iff their ids are equal,
// which by construction forces equal extents.
class Index {
 public:
  Index() = default;

  static Index make(int dim, std::string tag = "");

  std::uint64_t id() const { return id_; }
  int dim() const { return dim_; }
  const std::string& tag() const { return tag_; }

  bool valid() const { return id_ != 0; }

  // Same extent, fresh identity. Used for bra copies and operator legs.
  Index sibling(std::string tag = "") const { return make(dim_, std::move(tag)); }

  bool operator==(const Index& o) const { return id_ == o.id_; }
  bool operator!=(const Index& o) const { return id_ != o.id_; }

 private:
  Index(std::uint64_t id, int dim, std::string tag)
      : id_(id), dim_(dim), tag_(std::move(tag)) {}

  std::uint64_t id_ = 0;
  int dim_ = 1;
  std::string tag_;
};

}  // namespace glasstn

#endif
