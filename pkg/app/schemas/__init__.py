"""Pydantic schemas for files, reports and API validation"""
