"""도메인 서비스: numerics, datagen, network, transform, metrics, harness, report."""
