"""Settings, logging, exceptions, monitoring and health checks"""
