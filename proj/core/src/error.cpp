// Copyright 2026 The xverify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xverify/error.hpp"

namespace xverify {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kDuplicateEdge: return "DuplicateEdge";
        case ErrorKind::kSelfLoop: return "SelfLoop";
        case ErrorKind::kDisconnected: return "Disconnected";
        case ErrorKind::kUnequalIOSize: return "UnequalIOSize";
        case ErrorKind::kUnknownVertex: return "UnknownVertex";
        case ErrorKind::kUnknownName: return "UnknownName";
        case ErrorKind::kUnsupportedGate: return "UnsupportedGate";
        case ErrorKind::kInvalidFlow: return "InvalidFlow";
        case ErrorKind::kMissingAngle: return "MissingAngle";
        case ErrorKind::kBitsShapeMismatch: return "BitsShapeMismatch";
        case ErrorKind::kIncompatibleFlows: return "IncompatibleFlows";
        case ErrorKind::kEmptyGrid: return "EmptyGrid";
        case ErrorKind::kTooManyWires: return "TooManyWires";
        case ErrorKind::kInvalidDistribution: return "InvalidDistribution";
        case ErrorKind::kInvalidNoise: return "InvalidNoise";
        case ErrorKind::kShapeMismatch: return "ShapeMismatch";
        case ErrorKind::kVariableSetMismatch: return "VariableSetMismatch";
        case ErrorKind::kInsufficientShots: return "InsufficientShots";
        case ErrorKind::kRelationMismatch: return "RelationMismatch";
        case ErrorKind::kDegenerateInput: return "DegenerateInput";
        case ErrorKind::kOutOfRangeExpectation: return "OutOfRangeExpectation";
        case ErrorKind::kSubsetTooLarge: return "SubsetTooLarge";
        case ErrorKind::kPlanInvalid: return "PlanInvalid";
        case ErrorKind::kDeviceFailure: return "DeviceFailure";
        case ErrorKind::kMissingDistributions: return "MissingDistributions";
        case ErrorKind::kIncompleteData: return "IncompleteData";
        case ErrorKind::kParse: return "Parse";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string &message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace xverify
