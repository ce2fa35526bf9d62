"""Test suite for chaos-ld."""
