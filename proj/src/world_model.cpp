#include "bciassist/world_model.hpp"

#include <algorithm>

#include "bciassist/common.hpp"

namespace bciassist {

TypeHierarchy::TypeHierarchy() { parent_[kRoot] = ""; }

void TypeHierarchy::add(const std::string& type, const std::string& parent) {
  if (!contains(parent)) {
    throw Error(ErrorCode::unknown_type, "unknown parent type '" + parent + "'");
  }
  if (type == kRoot) return;
  if (auto it = parent_.find(type); it != parent_.end() && it->second != parent) {
    throw Error(ErrorCode::invalid_argument,
                "type '" + type + "' already declared with parent '" +
                    it->second + "'");
  }
  parent_[type] = parent;
}

bool TypeHierarchy::contains(const std::string& type) const {
  return parent_.count(type) != 0;
}

bool TypeHierarchy::is_subtype(const std::string& type,
                               const std::string& ancestor) const {
  auto it = parent_.find(type);
  while (it != parent_.end()) {
    if (it->first == ancestor) return true;
    if (it->second.empty()) return false;
    it = parent_.find(it->second);
  }
  return false;
}

const std::string& TypeHierarchy::parent(const std::string& type) const {
  auto it = parent_.find(type);
  if (it == parent_.end()) {
    throw Error(ErrorCode::unknown_type, "unknown type '" + type + "'");
  }
  return it->second;
}

std::vector<std::string> TypeHierarchy::ancestors(const std::string& type) const {
  std::vector<std::string> out;
  for (std::string t = type; !t.empty(); t = parent(t)) out.push_back(t);
  return out;
}

std::vector<std::string> TypeHierarchy::types() const {
  std::vector<std::string> out;
  for (const auto& [t, _] : parent_) out.push_back(t);
  return out;
}

bool Schema::individually_referable(const std::string& type_name) const {
  for (const auto& anon : anonymous_types) {
    if (types.is_subtype(type_name, anon)) return false;
  }
  return true;
}

const AttrValue* WorldObject::attribute(const std::string& key) const {
  auto it = attributes.find(key);
  return it == attributes.end() ? nullptr : &it->second;
}

const WorldObject* WorldState::find(const std::string& id) const {
  auto it = objects.find(id);
  return it == objects.end() ? nullptr : &it->second;
}

const WorldObject& WorldState::at(const std::string& id) const {
  if (const auto* o = find(id)) return *o;
  throw Error(ErrorCode::not_found, "no object '" + id + "'");
}

std::set<std::string> WorldState::ids() const {
  std::set<std::string> out;
  for (const auto& [id, _] : objects) out.insert(id);
  return out;
}

bool holds(const Constraint& c, const WorldObject& obj, const Schema& schema) {
  if (const auto* i = std::get_if<IndividualRef>(&c)) return obj.id == i->name;
  if (const auto* t = std::get_if<TypenameRef>(&c)) {
    return schema.types.is_subtype(obj.type_name, t->type);
  }
  const auto& r = std::get<RelationalRef>(c);
  if (r.key == kLocationKey) {
    return obj.placement && !obj.placement->location.empty() &&
           AttrValue{obj.placement->location} == r.value;
  }
  const auto* v = obj.attribute(r.key);
  return v != nullptr && *v == r.value;
}

namespace {

void check_vocabulary(const Constraint& c, const WorldState& state) {
  const Schema& schema = *state.schema;
  if (const auto* t = std::get_if<TypenameRef>(&c)) {
    if (!schema.types.contains(t->type)) {
      throw Error(ErrorCode::unknown_type, "unknown type '" + t->type + "'");
    }
  } else if (const auto* r = std::get_if<RelationalRef>(&c)) {
    if (r->key == kLocationKey || schema.attribute_keys.count(r->key)) return;
    for (const auto& [_, obj] : state.objects) {
      if (obj.attributes.count(r->key)) return;
    }
    throw Error(ErrorCode::unknown_symbol, "unknown attribute '" + r->key + "'");
  }
}

}  // namespace

std::set<std::string> query(const Reference& ref, const WorldState& state) {
  for (const auto& c : ref.conjuncts) check_vocabulary(c, state);
  std::set<std::string> out;
  for (const auto& [id, obj] : state.objects) {
    const bool all = std::all_of(
        ref.conjuncts.begin(), ref.conjuncts.end(),
        [&](const Constraint& c) { return holds(c, obj, *state.schema); });
    if (all) out.insert(id);
  }
  return out;
}

const char* to_string(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::added: return "added";
    case ChangeKind::removed: return "removed";
    case ChangeKind::modified: return "modified";
  }
  return "?";
}

std::set<ChangeKind> all_change_kinds() {
  return {ChangeKind::added, ChangeKind::removed, ChangeKind::modified};
}

Subscription::Subscription(std::shared_ptr<detail::SubscriberQueue> queue)
    : queue_(std::move(queue)) {}

Subscription::~Subscription() {
  if (!queue_) return;
  std::lock_guard lock(queue_->mutex);
  queue_->closed = true;
  queue_->cv.notify_all();
}

std::optional<ChangeEvent> Subscription::try_pop() {
  std::lock_guard lock(queue_->mutex);
  if (queue_->events.empty()) return std::nullopt;
  ChangeEvent e = queue_->events.front();
  queue_->events.pop_front();
  return e;
}

std::optional<ChangeEvent> Subscription::wait_pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(queue_->mutex);
  if (!queue_->cv.wait_for(lock, timeout, [&] {
        return !queue_->events.empty() || queue_->closed;
      })) {
    return std::nullopt;
  }
  if (queue_->events.empty()) return std::nullopt;
  ChangeEvent e = queue_->events.front();
  queue_->events.pop_front();
  return e;
}

std::vector<ChangeEvent> Subscription::drain() {
  std::lock_guard lock(queue_->mutex);
  std::vector<ChangeEvent> out(queue_->events.begin(), queue_->events.end());
  queue_->events.clear();
  return out;
}

KnowledgeBase::KnowledgeBase(std::shared_ptr<const Schema> schema)
    : schema_(std::move(schema)) {
  auto initial = std::make_shared<WorldState>();
  initial->schema = schema_;
  current_ = std::move(initial);
}

std::shared_ptr<const WorldState> KnowledgeBase::snapshot() const {
  std::lock_guard lock(mutex_);
  return current_;
}

std::uint64_t KnowledgeBase::revision() const {
  std::lock_guard lock(mutex_);
  return current_->revision;
}

std::uint64_t KnowledgeBase::upsert_object(const WorldObject& obj) {
  if (!schema_->types.contains(obj.type_name)) {
    throw Error(ErrorCode::unknown_type, "object '" + obj.id +
                                             "' has unknown type '" +
                                             obj.type_name + "'");
  }
  if (obj.id.empty()) {
    throw Error(ErrorCode::invalid_argument, "object id must not be empty");
  }
  std::lock_guard lock(mutex_);
  auto objects = current_->objects;
  const bool existed = objects.count(obj.id) != 0;
  objects[obj.id] = obj;
  return commit(std::move(objects),
                existed ? ChangeKind::modified : ChangeKind::added, obj.id, &obj);
}

std::uint64_t KnowledgeBase::remove_object(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto objects = current_->objects;
  if (objects.erase(id) == 0) {
    throw Error(ErrorCode::not_found, "no object '" + id + "'");
  }
  return commit(std::move(objects), ChangeKind::removed, id, nullptr);
}

void KnowledgeBase::declare_expected(std::vector<ExpectedChange> changes) {
  std::lock_guard lock(mutex_);
  for (auto& c : changes) expected_.push_back(std::move(c));
}

void KnowledgeBase::clear_expected() {
  std::lock_guard lock(mutex_);
  expected_.clear();
}

Subscription KnowledgeBase::subscribe(std::set<ChangeKind> filter) {
  auto queue = std::make_shared<detail::SubscriberQueue>();
  queue->filter = std::move(filter);
  std::lock_guard lock(mutex_);
  subscribers_.push_back(queue);
  return Subscription(queue);
}

bool KnowledgeBase::consume_expectation(ChangeKind kind, const std::string& id,
                                        const WorldObject* result) {
  for (auto it = expected_.begin(); it != expected_.end(); ++it) {
    if (it->object_id != id || it->kind != kind) continue;
    if (it->predicted && (result == nullptr || !(*it->predicted == *result))) {
      continue;
    }
    expected_.erase(it);
    return true;
  }
  return false;
}

// Caller holds mutex_.
std::uint64_t KnowledgeBase::commit(std::map<std::string, WorldObject> objects,
                                    ChangeKind kind, const std::string& id,
                                    const WorldObject* result) {
  auto next = std::make_shared<WorldState>();
  next->revision = current_->revision + 1;
  next->objects = std::move(objects);
  next->schema = schema_;
  current_ = std::move(next);

  const ChangeEvent event{current_->revision, kind, id,
                          consume_expectation(kind, id, result)};
  // Delivery happens under the commit lock, so every queue sees revisions in
  // commit order.
  std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
  for (const auto& weak : subscribers_) {
    auto q = weak.lock();
    if (!q) continue;
    std::lock_guard qlock(q->mutex);
    if (q->closed || !q->filter.count(kind)) continue;
    q->events.push_back(event);
    q->cv.notify_all();
  }
  return current_->revision;
}

}  // namespace bciassist
