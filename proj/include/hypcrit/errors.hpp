#pragma once

#include <stdexcept>
#include <string>

namespace hypcrit {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Points or isometries of different model spaces were mixed.
class KindMismatch : public Error {
public:
    using Error::Error;
};

/// An argument violates an operation's documented precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A computation needs data beyond what was enumerated or truncated
/// (ball too shallow, boundary word too short).
class InsufficientData : public Error {
public:
    using Error::Error;
};

/// An isometry has the wrong type for the requested quantity
/// (elliptic or parabolic where a hyperbolic element is required).
class ClassificationError : public Error {
public:
    using Error::Error;
};

/// A group action fails the checks that place it in the class M(delta, D).
class CertificationError : public Error {
public:
    using Error::Error;
};

/// A table of a witness is missing an entry.
class MalformedWitness : public Error {
public:
    using Error::Error;
};

} // namespace hypcrit
