#pragma once

#include <condition_variable>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bciassist/pose.hpp"
#include "bciassist/reference.hpp"

namespace bciassist {

// Single-inheritance type tree rooted at "object".
class TypeHierarchy {
 public:
  static constexpr const char* kRoot = "object";

  TypeHierarchy();

  // Parent must already exist.
  void add(const std::string& type, const std::string& parent);

  bool contains(const std::string& type) const;
  bool is_subtype(const std::string& type, const std::string& ancestor) const;
  const std::string& parent(const std::string& type) const;
  // `type` first, root last.
  std::vector<std::string> ancestors(const std::string& type) const;
  std::vector<std::string> types() const;

 private:
  std::map<std::string, std::string> parent_;
};

// Static vocabulary shared by the knowledge base and the user interface.
struct Schema {
  TypeHierarchy types;
  std::set<std::string> attribute_keys;
  // Instances of these types cannot be referred to by name.
  std::set<std::string> anonymous_types;

  bool individually_referable(const std::string& type_name) const;
};

struct Placement {
  std::string location;  // empty for free-standing objects (locations, robot)
  Pose2D pose;

  bool operator==(const Placement&) const = default;
};

struct WorldObject {
  std::string id;
  std::string type_name;
  std::map<std::string, AttrValue> attributes;
  std::optional<Placement> placement;

  const AttrValue* attribute(const std::string& key) const;
  bool operator==(const WorldObject&) const = default;
};

// Immutable snapshot of the knowledge base.
struct WorldState {
  std::uint64_t revision = 0;
  std::map<std::string, WorldObject> objects;
  std::shared_ptr<const Schema> schema;

  const WorldObject* find(const std::string& id) const;
  const WorldObject& at(const std::string& id) const;
  std::set<std::string> ids() const;
};

// True iff `c` holds of `obj`.
bool holds(const Constraint& c, const WorldObject& obj, const Schema& schema);

// Objects satisfying every conjunct. Throws on unknown types or attribute keys.
std::set<std::string> query(const Reference& ref, const WorldState& state);

enum class ChangeKind { added, removed, modified };

const char* to_string(ChangeKind kind);

struct ChangeEvent {
  std::uint64_t revision = 0;
  ChangeKind kind = ChangeKind::added;
  std::string object_id;
  bool expected = false;

  bool operator==(const ChangeEvent&) const = default;
};

// A change announced before it is committed. If `predicted` is set, only a
// commit producing exactly that object counts as expected.
struct ExpectedChange {
  std::string object_id;
  ChangeKind kind = ChangeKind::modified;
  std::optional<WorldObject> predicted;
};

namespace detail {
struct SubscriberQueue {
  std::set<ChangeKind> filter;
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<ChangeEvent> events;
  bool closed = false;
};
}  // namespace detail

// Receiving end of a change stream. Unsubscribes on destruction.
class Subscription {
 public:
  Subscription() = default;
  explicit Subscription(std::shared_ptr<detail::SubscriberQueue> queue);
  Subscription(Subscription&&) noexcept = default;
  Subscription& operator=(Subscription&&) noexcept = default;
  ~Subscription();

  std::optional<ChangeEvent> try_pop();
  std::optional<ChangeEvent> wait_pop(std::chrono::milliseconds timeout);
  std::vector<ChangeEvent> drain();

 private:
  std::shared_ptr<detail::SubscriberQueue> queue_;
};

std::set<ChangeKind> all_change_kinds();

// Central store of attributed objects. Writers are serialized through one
// commit point; readers get immutable snapshots.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(std::shared_ptr<const Schema> schema);

  std::shared_ptr<const WorldState> snapshot() const;
  std::uint64_t revision() const;
  const Schema& schema() const { return *schema_; }

  // Inserts or replaces by id; returns the new revision.
  std::uint64_t upsert_object(const WorldObject& obj);
  std::uint64_t remove_object(const std::string& id);

  void declare_expected(std::vector<ExpectedChange> changes);
  void clear_expected();

  Subscription subscribe(std::set<ChangeKind> filter = all_change_kinds());

 private:
  std::uint64_t commit(std::map<std::string, WorldObject> objects,
                       ChangeKind kind, const std::string& id,
                       const WorldObject* result);
  bool consume_expectation(ChangeKind kind, const std::string& id,
                           const WorldObject* result);

  std::shared_ptr<const Schema> schema_;
  mutable std::mutex mutex_;
  std::shared_ptr<const WorldState> current_;
  std::vector<ExpectedChange> expected_;
  std::vector<std::weak_ptr<detail::SubscriberQueue>> subscribers_;
};

}  // namespace bciassist
