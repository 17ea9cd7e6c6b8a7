#include "podsim/busnet.hpp"

#include <algorithm>
#include <stdexcept>

namespace podsim {

std::string_view to_string(NodeId id) {
    switch (id) {
        case NodeId::navigation: return "navigation";
        case NodeId::power: return "power";
        case NodeId::vehicle: return "vehicle";
        case NodeId::front_module: return "front_module";
        case NodeId::rear_module: return "rear_module";
    }
    return "unknown";
}

std::string_view to_string(PayloadKind kind) {
    switch (kind) {
        case PayloadKind::pose: return "pose";
        case PayloadKind::fault: return "fault";
        case PayloadKind::motor_poll: return "motor_poll";
        case PayloadKind::brake_command: return "brake_command";
        case PayloadKind::telemetry: return "telemetry";
    }
    return "unknown";
}

std::string_view to_string(VehicleMode mode) {
    switch (mode) {
        case VehicleMode::NOMINAL: return "NOMINAL";
        case VehicleMode::FAULT_RECEIVED: return "FAULT_RECEIVED";
        case VehicleMode::BRAKING: return "BRAKING";
        case VehicleMode::STOPPED: return "STOPPED";
    }
    return "unknown";
}

PayloadKind kind_of(const Payload& payload) {
    struct Visitor {
        PayloadKind operator()(const PosePayload&) const { return PayloadKind::pose; }
        PayloadKind operator()(const FaultPayload&) const { return PayloadKind::fault; }
        PayloadKind operator()(const MotorPollPayload&) const { return PayloadKind::motor_poll; }
        PayloadKind operator()(const BrakeCommandPayload&) const {
            return PayloadKind::brake_command;
        }
        PayloadKind operator()(const TelemetryPayload&) const { return PayloadKind::telemetry; }
    };
    return std::visit(Visitor{}, payload);
}

int PriorityMap::of(PayloadKind kind) const {
    switch (kind) {
        case PayloadKind::pose: return pose;
        case PayloadKind::fault: return fault;
        case PayloadKind::motor_poll: return motor_poll;
        case PayloadKind::brake_command: return brake_command;
        case PayloadKind::telemetry: return telemetry;
    }
    throw std::invalid_argument("unknown payload kind");
}

std::vector<BusMessage> arbitrate(std::vector<BusMessage> pending) {
    std::sort(pending.begin(), pending.end(), [](const BusMessage& a, const BusMessage& b) {
        if (a.priority != b.priority) {
            return a.priority < b.priority;
        }
        return a.seq < b.seq;
    });
    return pending;
}

Bus::Bus(BusConfig cfg) : cfg_(cfg) {
    if (cfg_.bandwidth == 0) {
        throw std::invalid_argument("bus bandwidth must be at least 1 message per tick");
    }
    if (cfg_.capacity == 0) {
        throw std::invalid_argument("bus capacity must be at least 1");
    }
}

void Bus::publish(BusMessage msg, std::uint64_t tick) {
    msg.seq = next_seq_++;
    msg.tick = tick;
    queue_.push_back(std::move(msg));
    ++published_;

    if (queue_.size() <= cfg_.capacity) {
        return;
    }
    // Over capacity: drop the lowest-priority pending message (ties broken
    // against the youngest), but never an emergency.  A queue full of
    // priority-0 traffic is allowed to exceed capacity instead.
    auto victim = queue_.end();
    for (auto it = queue_.begin(); it != queue_.end(); ++it) {
        if (it->priority == 0) {
            continue;
        }
        if (victim == queue_.end() || it->priority > victim->priority ||
            (it->priority == victim->priority && it->seq > victim->seq)) {
            victim = it;
        }
    }
    if (victim != queue_.end()) {
        queue_.erase(victim);
        ++dropped_;
    }
}

std::vector<BusMessage> Bus::deliver(std::uint64_t tick) {
    std::vector<BusMessage> eligible;
    std::vector<BusMessage> held;
    eligible.reserve(queue_.size());
    for (BusMessage& msg : queue_) {
        if (msg.tick < tick) {
            eligible.push_back(std::move(msg));
        } else {
            held.push_back(std::move(msg));
        }
    }
    eligible = arbitrate(std::move(eligible));

    std::vector<BusMessage> delivered;
    const std::size_t n = std::min(cfg_.bandwidth, eligible.size());
    delivered.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        delivered.push_back(std::move(eligible[i]));
    }
    // Losers carry over and compete again next tick.
    queue_.clear();
    for (std::size_t i = n; i < eligible.size(); ++i) {
        queue_.push_back(std::move(eligible[i]));
    }
    for (BusMessage& msg : held) {
        queue_.push_back(std::move(msg));
    }

    for (const BusMessage& msg : delivered) {
        log_.push_back(DeliveryRecord{tick, msg});
    }
    return delivered;
}

VehicleController::VehicleController(VehicleConfig cfg) : cfg_(cfg) {
    if (!(cfg_.brake_decel > 0.0)) {
        throw std::invalid_argument("brake_decel must be positive");
    }
    if (cfg_.stop_velocity_tol < 0.0) {
        throw std::invalid_argument("stop_velocity_tol must be >= 0");
    }
}

std::vector<BusMessage> VehicleController::step(std::uint64_t tick,
                                                std::span<const BusMessage> inbox) {
    bool fault_seen = false;
    for (const BusMessage& msg : inbox) {
        if (const auto* pose = std::get_if<PosePayload>(&msg.payload)) {
            last_velocity_estimate_ = pose->v_est;
            velocity_seen_ = true;
        } else if (std::holds_alternative<FaultPayload>(msg.payload)) {
            fault_seen = true;
        }
    }

    std::vector<BusMessage> outbox;
    switch (mode_) {
        case VehicleMode::NOMINAL:
            if (fault_seen) {
                mode_ = VehicleMode::FAULT_RECEIVED;
                fault_received_tick_ = tick;
                BusMessage brake;
                brake.priority = cfg_.priorities.brake_command;
                brake.msg_id = next_msg_id_++;
                brake.source = NodeId::vehicle;
                brake.payload = BrakeCommandPayload{cfg_.brake_decel};
                outbox.push_back(std::move(brake));
            } else {
                BusMessage poll;
                poll.priority = cfg_.priorities.motor_poll;
                poll.msg_id = next_msg_id_++;
                poll.source = NodeId::vehicle;
                poll.payload = MotorPollPayload{};
                outbox.push_back(std::move(poll));
            }
            break;
        case VehicleMode::FAULT_RECEIVED:
            mode_ = VehicleMode::BRAKING;
            braking_tick_ = tick;
            break;
        case VehicleMode::BRAKING:
            if (velocity_seen_ && last_velocity_estimate_ <= cfg_.stop_velocity_tol) {
                mode_ = VehicleMode::STOPPED;
                stopped_tick_ = tick;
            }
            break;
        case VehicleMode::STOPPED:
            break;  // absorbing
    }
    return outbox;
}

BusMessage navigation_node_step(NodeCounters& node, std::uint64_t tick,
                                const PoseEstimate& estimate, const PriorityMap& pri) {
    BusMessage msg;
    msg.priority = pri.pose;
    msg.msg_id = node.next_msg_id++;
    msg.source = NodeId::navigation;
    msg.payload = PosePayload{estimate.t, estimate.accel.mean, estimate.vel.mean,
                              estimate.pos.mean};
    msg.tick = tick;
    return msg;
}

std::vector<BusMessage> power_node_step(NodeCounters& node, std::uint64_t tick,
                                        FaultDetector& detector,
                                        std::span<const PairSample> samples,
                                        const PodState& pod, const PriorityMap& pri) {
    std::vector<BusMessage> out;
    for (const PairSample& sample : samples) {
        if (auto event = detector.push(sample.t, sample.v1, sample.v2, pod)) {
            BusMessage msg;
            msg.priority = pri.fault;
            msg.msg_id = node.next_msg_id++;
            msg.source = NodeId::power;
            msg.payload =
                FaultPayload{event->t, event->pair_id, event->icc_value, event->threshold_used};
            msg.tick = tick;
            out.push_back(std::move(msg));
        }
    }
    return out;
}

BusMessage telemetry_message(NodeCounters& node, NodeId module, std::uint64_t tick,
                             int channel, double value, const PriorityMap& pri) {
    BusMessage msg;
    msg.priority = pri.telemetry;
    msg.msg_id = node.next_msg_id++;
    msg.source = module;
    msg.payload = TelemetryPayload{channel, value};
    msg.tick = tick;
    return msg;
}

}  // namespace podsim
