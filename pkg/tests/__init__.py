"""Document Creator Tests"""
