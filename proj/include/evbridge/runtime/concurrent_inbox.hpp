#pragma once

#include <atomic>
#include <utility>
#include <vector>

namespace evbridge {

/// Multi-producer inbox. push() is lock-free (a CAS onto an intrusive
/// stack); drain() takes the whole list with one exchange and returns it in
/// push order. Draining is single-consumer per call.
template <class T>
class ConcurrentInbox {
 public:
  ConcurrentInbox() = default;
  ConcurrentInbox(const ConcurrentInbox&) = delete;
  ConcurrentInbox& operator=(const ConcurrentInbox&) = delete;
  ~ConcurrentInbox() { free_list(head_.exchange(nullptr)); }

  void push(T value) {
    auto* node = new Node{std::move(value), head_.load(std::memory_order_relaxed)};
    while (!head_.compare_exchange_weak(node->next, node, std::memory_order_release,
                                        std::memory_order_relaxed)) {
    }
  }

  bool empty() const { return head_.load(std::memory_order_acquire) == nullptr; }

  std::vector<T> drain() {
    Node* head = head_.exchange(nullptr, std::memory_order_acquire);
    std::vector<T> out;
    for (Node* n = head; n; n = n->next) out.push_back(std::move(n->value));
    free_list(head);
    return {std::make_move_iterator(out.rbegin()), std::make_move_iterator(out.rend())};
  }

 private:
  struct Node {
    T value;
    Node* next;
  };

  static void free_list(Node* n) {
    while (n) delete std::exchange(n, n->next);
  }

  std::atomic<Node*> head_{nullptr};
};

}  // namespace evbridge
