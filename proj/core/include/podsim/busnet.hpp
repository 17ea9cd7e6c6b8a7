#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "podsim/battery.hpp"
#include "podsim/estimation.hpp"

namespace podsim {

enum class NodeId { navigation, power, vehicle, front_module, rear_module };
enum class PayloadKind { pose, fault, motor_poll, brake_command, telemetry };

std::string_view to_string(NodeId id);
std::string_view to_string(PayloadKind kind);

/// Per-tick pose broadcast from the navigation node.
struct PosePayload {
    double t = 0.0;
    double a_est = 0.0;
    double v_est = 0.0;
    double x_est = 0.0;
};

/// Battery fault alarm from the power node.
struct FaultPayload {
    double t = 0.0;
    int pair_id = 0;
    double icc_value = 0.0;
    double threshold_used = 0.0;
};

/// Periodic motor-controller poll request from the vehicle controller.
struct MotorPollPayload {};

/// Emergency braking order.
struct BrakeCommandPayload {
    double decel = 0.0;  ///< commanded deceleration magnitude (m/s^2)
};

/// Housekeeping value from a sensor module.
struct TelemetryPayload {
    int channel = 0;
    double value = 0.0;
};

using Payload = std::variant<PosePayload, FaultPayload, MotorPollPayload,
                             BrakeCommandPayload, TelemetryPayload>;

PayloadKind kind_of(const Payload& payload);

/// Priority-tagged message competing for the bus.  `seq` is assigned by the
/// bus at publish time and, together with the priority, totally orders any
/// message set; `tick` records the publish tick.
struct BusMessage {
    int priority = 0;  ///< 0 is the highest priority
    std::uint64_t msg_id = 0;
    NodeId source = NodeId::navigation;
    Payload payload;
    std::uint64_t seq = 0;
    std::uint64_t tick = 0;
};

/// Priority assignment per payload kind.  Emergency traffic (faults and brake
/// commands) rides at 0; everything else is strictly lower priority.
struct PriorityMap {
    int fault = 0;
    int brake_command = 0;
    int motor_poll = 1;
    int pose = 3;
    int telemetry = 5;

    int of(PayloadKind kind) const;

    bool operator==(const PriorityMap&) const = default;
};

struct BusConfig {
    std::size_t bandwidth = 8;  ///< messages delivered per tick
    std::size_t capacity = 64;  ///< pending-queue size that triggers eviction

    bool operator==(const BusConfig&) const = default;
};

/// One delivered message with its delivery tick.
struct DeliveryRecord {
    std::uint64_t tick = 0;
    BusMessage msg;
};

/// Arbitration: sorts a pending set by (priority ascending, seq ascending).
std::vector<BusMessage> arbitrate(std::vector<BusMessage> pending);

/// Discrete-tick priority bus.
///
/// publish() queues a message for arbitration at the next tick; deliver(t)
/// hands out at most `bandwidth` messages published before t, highest
/// priority first, and carries the remainder over.  When the queue passes
/// `capacity`, the lowest-priority pending message is dropped and counted —
/// but never a priority-0 message, so the queue may exceed capacity when it
/// is full of emergencies.
class Bus {
public:
    explicit Bus(BusConfig cfg = {});

    /// Queues the message at `tick`, assigning its sequence number.
    void publish(BusMessage msg, std::uint64_t tick);

    /// Delivers this tick's winners (publish tick < `tick`).
    std::vector<BusMessage> deliver(std::uint64_t tick);

    const std::vector<DeliveryRecord>& log() const { return log_; }
    std::size_t dropped() const { return dropped_; }
    std::size_t published() const { return published_; }
    std::size_t pending() const { return queue_.size(); }

private:
    BusConfig cfg_;
    std::vector<BusMessage> queue_;
    std::vector<DeliveryRecord> log_;
    std::uint64_t next_seq_ = 0;
    std::size_t dropped_ = 0;
    std::size_t published_ = 0;
};

enum class VehicleMode { NOMINAL, FAULT_RECEIVED, BRAKING, STOPPED };

std::string_view to_string(VehicleMode mode);

struct VehicleConfig {
    double brake_decel = 20.0;       ///< commanded braking magnitude (m/s^2)
    double stop_velocity_tol = 1.0;  ///< velocity estimate treated as stopped (m/s)
    PriorityMap priorities;

    bool operator==(const VehicleConfig&) const = default;
};

/// Emergency Braking Protocol state machine.
///
/// NOMINAL: polls the motor controller every tick; a delivered fault message
/// flips it to FAULT_RECEIVED and emits one priority-0 brake command the same
/// tick.  FAULT_RECEIVED hardens into BRAKING on the next tick, BRAKING turns
/// into STOPPED once the pose-message velocity estimate is at or below the
/// stop tolerance, and STOPPED is absorbing.
class VehicleController {
public:
    explicit VehicleController(VehicleConfig cfg = {});

    /// Consumes this tick's deliveries, returns the messages to publish.
    std::vector<BusMessage> step(std::uint64_t tick, std::span<const BusMessage> inbox);

    VehicleMode mode() const { return mode_; }

    /// Tick bookkeeping for latency reporting (empty until reached).
    std::optional<std::uint64_t> fault_received_tick() const { return fault_received_tick_; }
    std::optional<std::uint64_t> braking_tick() const { return braking_tick_; }
    std::optional<std::uint64_t> stopped_tick() const { return stopped_tick_; }

private:
    VehicleConfig cfg_;
    VehicleMode mode_ = VehicleMode::NOMINAL;
    std::uint64_t next_msg_id_ = 0;
    double last_velocity_estimate_ = 0.0;
    bool velocity_seen_ = false;
    std::optional<std::uint64_t> fault_received_tick_;
    std::optional<std::uint64_t> braking_tick_;
    std::optional<std::uint64_t> stopped_tick_;
};

/// Message-id counter owned by each simple node.
struct NodeCounters {
    std::uint64_t next_msg_id = 0;
};

/// Navigation node: wraps this tick's pose estimate into its bus broadcast.
BusMessage navigation_node_step(NodeCounters& node, std::uint64_t tick,
                                const PoseEstimate& estimate, const PriorityMap& pri);

/// One paired battery sample as seen by the power node.
struct PairSample {
    double t = 0.0;
    double v1 = 0.0;
    double v2 = 0.0;
};

/// Power node: feeds this tick's paired samples through the fault detector
/// and emits exactly one priority-`fault` message per emitted FaultEvent.
std::vector<BusMessage> power_node_step(NodeCounters& node, std::uint64_t tick,
                                        FaultDetector& detector,
                                        std::span<const PairSample> samples,
                                        const PodState& pod, const PriorityMap& pri);

/// Front/rear sensor modules are pass-through relays; they only contribute
/// housekeeping telemetry to the bus.
BusMessage telemetry_message(NodeCounters& node, NodeId module, std::uint64_t tick,
                             int channel, double value, const PriorityMap& pri);

}  // namespace podsim
